#include <iostream>
#include <string>
#include <vector>

#include "freqctl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return freqctl::cli::run(args, std::cout, std::cerr);
}
