#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return bb84sim::cli::run(argc, argv, std::cout, std::cerr); }
