#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace soei::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kOperationalError = 1;
inline constexpr int kReproductionMismatch = 2;

// Full command line entry point. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Directory holding templates, rubric, few-shots and fixtures when neither
// --assets nor SOEI_ASSETS_DIR is given.
std::filesystem::path default_assets_dir();

}  // namespace soei::cli
