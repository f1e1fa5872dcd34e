#include <iostream>

#include "dirnet/cli.hpp"

int main(int argc, char** argv) { return dirnet::run_cli(argc, argv, std::cout, std::cerr); }
