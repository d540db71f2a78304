#include <iostream>
#include <string>
#include <vector>

#include "ensemblectl/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ensemblectl::run(args, std::cout, std::cerr);
}
