#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "stcov_tools/cli.hpp"

int main(int argc, char** argv) {
  try {
    return stcov::tools::run_cli(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const std::exception& e) {
    std::cerr << "stcov: internal error: " << e.what() << '\n';
    return 1;
  }
}
