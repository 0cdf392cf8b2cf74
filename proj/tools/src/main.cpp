#include <iostream>

#include "warerover/cli.hpp"

int main(int argc, char** argv) { return warerover::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
