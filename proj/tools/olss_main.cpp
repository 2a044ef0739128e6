#include <iostream>
#include <string>
#include <vector>

#include "olss/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return olss::run_cli(args, std::cout, std::cerr);
}
