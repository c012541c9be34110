#include <iostream>

#include "pma/cli.hpp"

int main(int argc, char** argv) { return pma::cli::main(argc, argv, std::cout, std::cerr); }
