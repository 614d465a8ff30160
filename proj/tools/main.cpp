#include <iostream>

#include "tordiff/cli.hpp"

int main(int argc, char** argv) { return tordiff::cli_main(argc, argv, std::cout, std::cerr); }
