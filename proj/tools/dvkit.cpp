#include <iostream>
#include <string>
#include <vector>

#include "dvkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dvkit::cli::run(args, std::cout, std::cerr);
}
