#include <iostream>

#include "fracneu/cli.hpp"

int main(int argc, char** argv) { return fracneu::cli::run(argc, argv, std::cout, std::cerr); }
