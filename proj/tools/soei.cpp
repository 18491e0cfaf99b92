#include <iostream>

#include "soei/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return soei::cli::run(args, std::cout, std::cerr);
}
