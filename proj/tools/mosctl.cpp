#include <iostream>

#include "mos/cli.hpp"

int main(int argc, char** argv) { return mos::run_cli(argc, argv, std::cout, std::cerr); }
