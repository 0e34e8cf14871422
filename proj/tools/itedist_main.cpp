#include <iostream>

#include "itedist/cli.hpp"

int main(int argc, char** argv) { return itedist::cli::main(argc, argv, std::cout, std::cerr); }
