#include <iostream>
#include <string>
#include <vector>

#include "descobs/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return descobs::run_cli(args, std::cout, std::cerr);
}
