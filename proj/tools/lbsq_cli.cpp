#include <iostream>

#include "lbsq/commands.hpp"

int main(int argc, char** argv) {
    return lbsq::cli::run_cli(argc, argv, std::cout, std::cerr);
}
