#include <iostream>

#include "mklvc/cli.hpp"

int main(int argc, char** argv) { return mklvc::run_cli(argc, argv, std::cout, std::cerr); }
