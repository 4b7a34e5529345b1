#include <iostream>
#include <string>
#include <vector>

#include "syncdiff/tools/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return syncdiff::tools::run_cli(args, std::cout, std::cerr);
}
