#include "dtnlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dtnlab::cli::run_main(argc, argv, std::cout, std::cerr); }
