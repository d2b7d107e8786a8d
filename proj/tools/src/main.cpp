#include <iostream>

#include "pathsim_cli/cli.hpp"

int main(int argc, char** argv) { return pathsim::cli::run(argc, argv, std::cout, std::cerr); }
