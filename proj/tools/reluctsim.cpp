#include <iostream>

#include "reluctsim/cli.hpp"

int main(int argc, char** argv) { return reluctsim::cli::run(argc, argv, std::cout, std::cerr); }
