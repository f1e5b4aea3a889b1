#include "magc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return magc::run_cli(argc, argv, std::cout, std::cerr); }
