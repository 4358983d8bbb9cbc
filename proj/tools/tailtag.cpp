// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "tailtag/cli.hpp"

int main(int argc, char** argv) {
  return tailtag::cli_main(argc, argv, std::cout, std::cerr);
}
