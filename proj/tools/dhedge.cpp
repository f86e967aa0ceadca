#include <iostream>
#include <string>
#include <vector>

#include "dhedge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dhedge::run_cli(args, std::cout, std::cerr);
}
