#include <iostream>

#include "spinmotion/cli.hpp"

int main(int argc, char** argv) {
  return spinmotion::cli::cli_main(argc, argv, std::cout, std::cerr);
}
