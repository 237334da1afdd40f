#include <string>
#include <vector>

#include "spnkit/cli.hpp"

int main(int argc, char** argv) {
  return spnkit::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
