#include <iostream>

#include "ilab/scenario.hpp"

int main(int argc, char** argv) { return ilab::scenario::run_cli(argc, argv, std::cout, std::cerr); }
