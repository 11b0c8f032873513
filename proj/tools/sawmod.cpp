#include <iostream>

#include "sawmod/cli.hpp"

int main(int argc, char **argv) { return sawmod::cli::run(argc, argv, std::cout, std::cerr); }
