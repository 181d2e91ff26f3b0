#include <iostream>
#include <string>
#include <vector>

#include "qreform/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return qreform::run_cli(args, std::cout, std::cerr);
}
