#include <iostream>

#include "psp_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return psp::cli::run(args, std::cout, std::cerr);
}
