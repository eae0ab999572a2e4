#include <iostream>

#include "fracpg/cli.hpp"

int main(int argc, char** argv) { return fracpg::cli::run(argc, argv, std::cout, std::cerr); }
