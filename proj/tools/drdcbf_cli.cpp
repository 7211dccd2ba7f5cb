#include "drdcbf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return drdcbf::run_cli(argc, argv, std::cout, std::cerr);
}
