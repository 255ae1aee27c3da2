#include <iostream>

#include "saddlelab/cli.hpp"

int main(int argc, char** argv) { return saddlelab::run_cli(argc, argv, std::cout, std::cerr); }
