#include <iostream>

#include "gpi/cli.hpp"

int main(int argc, char** argv) {
    return gpi::cli::run(argc, argv, std::cout, std::cerr);
}
