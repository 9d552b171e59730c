#include <iostream>

#include "diffsub/cli.hpp"

int main(int argc, char** argv) { return diffsub::run_cli(argc, argv, std::cout, std::cerr); }
