#include <iostream>

#include "shary/service/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return shary::service::run_cli(args, nullptr, std::cout, std::cerr);
}
