#include <iostream>

#include "hjprox/cli.hpp"
#include "hjprox/core.hpp"

int main(int argc, char** argv) {
  hjprox::tune_allocator();
  return hjprox::cli::run(argc, argv, std::cout, std::cerr);
}
