#include <iostream>
#include <string>
#include <vector>

#include "pwinr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pwinr::run_cli(std::move(args), std::cout, std::cerr);
}
