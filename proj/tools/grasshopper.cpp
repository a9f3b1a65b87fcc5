#include <iostream>
#include <string>
#include <vector>

#include "grasshopper/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return grasshopper::run_command(args, std::cout, std::cerr);
}
