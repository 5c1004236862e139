#include <iostream>

#include "levelcross/cli.hpp"

int main(int argc, char** argv) { return lcx::cli::run(argc, argv, std::cout, std::cerr); }
