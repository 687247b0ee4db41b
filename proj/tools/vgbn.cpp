#include <iostream>

#include "vgbn/cli.hpp"

int main(int argc, char** argv) { return vgbn::run_cli(argc, argv, std::cout, std::cerr); }
