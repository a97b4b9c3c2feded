#include <iostream>
#include <string>
#include <vector>

#include "pbcert/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pbcert::cli_dispatch(args, std::cout, std::cerr);
}
