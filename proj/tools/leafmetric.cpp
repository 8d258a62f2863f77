#include "leafmetric/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return leafmetric::cli::run(argc, argv, std::cout, std::cerr);
}
