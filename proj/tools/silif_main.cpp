#include <iostream>
#include <string>
#include <vector>

#include "silif/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return silif::dispatch(args, std::cout, std::cerr);
}
