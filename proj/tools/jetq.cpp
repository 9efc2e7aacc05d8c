#include <iostream>

#include "jetq/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return jetq::run_cli(args, std::cout, std::cerr);
}
