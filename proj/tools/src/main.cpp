#include <iostream>
#include <string>
#include <vector>

#include "esq/cli/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return esq::cli::run(args, std::cout, std::cerr);
}
