#include <iostream>

#include "trifuse/cli.hpp"

int main(int argc, char** argv) { return trifuse::cli::run(argc, argv, std::cout, std::cerr); }
