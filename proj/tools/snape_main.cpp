#include <iostream>
#include <string>
#include <vector>

#include "snape/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return snape::cli::dispatch(args, std::cout, std::cerr);
}
