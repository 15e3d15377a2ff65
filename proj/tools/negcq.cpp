#include "negcq/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return negcq::cli::main(argc, argv, std::cout, std::cerr); }
