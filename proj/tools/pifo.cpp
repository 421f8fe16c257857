#include <iostream>

#include "pifo/cli/cli.hpp"

int main(int argc, char** argv) { return pifo::cli::main_entry(argc, argv, std::cout, std::cerr); }
