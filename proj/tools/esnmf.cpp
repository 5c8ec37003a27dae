#include <iostream>
#include <string>
#include <vector>

#include "esnmf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return esnmf::cli::run(args, std::cout, std::cerr);
}
