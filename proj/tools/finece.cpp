#include <iostream>

#include "finece/cli.hpp"

int main(int argc, char** argv) { return finece::cli::run(argc, argv, std::cout, std::cerr); }
