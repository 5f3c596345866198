#include <iostream>
#include <string>
#include <vector>

#include "anie/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return anie::cli::run(args, std::cout, std::cerr);
}
