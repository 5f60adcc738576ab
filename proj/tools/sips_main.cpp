#include <string>
#include <vector>

#include "sips/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sips::cli::run(args);
}
