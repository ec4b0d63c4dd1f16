#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return madstrap::cli::run(argc, argv, std::cout, std::cerr); }
