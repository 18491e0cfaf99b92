#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace soei {

enum class ReproTarget { Table5, TableA4, Table3, Table6, Table1 };
inline constexpr ReproTarget kAllReproTargets[] = {ReproTarget::Table5, ReproTarget::TableA4, ReproTarget::Table3,
                                                   ReproTarget::Table6, ReproTarget::Table1};

std::string_view to_string(ReproTarget target);
std::optional<ReproTarget> parse_repro_target(std::string_view text);

enum class CheckMode {
  Within,     // |computed - expected| <= tolerance
  Below,      // computed < expected
  Exact3,     // equal after rounding both to 3 decimals
};

struct ReproCheck {
  std::string name;
  double expected = 0.0;
  double computed = 0.0;
  double tolerance = 0.0;
  CheckMode mode = CheckMode::Within;
  bool pass = false;
};

struct ReproReport {
  ReproTarget target = ReproTarget::Table5;
  std::vector<ReproCheck> checks;

  bool passed() const;
};

ReproCheck make_check(std::string name, double expected, double computed, double tolerance,
                      CheckMode mode = CheckMode::Within);

// Recomputes one published table from the JSON fixtures in `fixtures_dir`.
ReproReport reproduce(ReproTarget target, const std::filesystem::path& fixtures_dir);

void print_report(std::ostream& out, const ReproReport& report);

}  // namespace soei
