#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return freeseed::cli::run(args, std::cout, std::cerr);
}
