#include <iostream>
#include <string>
#include <vector>

#include "tci/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return tci::cli::run(args, std::cout, std::cerr);
}
