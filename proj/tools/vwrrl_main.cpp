#include <iostream>
#include <string>
#include <vector>

#include "vwrrl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vwrrl::run_cli(args, std::cout, std::cerr);
}
