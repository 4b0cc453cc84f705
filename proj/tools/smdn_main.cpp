#include <iostream>
#include <string>
#include <vector>

#include "smdn/cli.hpp"

int main(int argc, char** argv) {
  return smdn::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
