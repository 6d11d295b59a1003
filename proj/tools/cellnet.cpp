#include <iostream>

#include "cellnet/cli.hpp"

int main(int argc, char** argv) { return cellnet::cli::run(argc, argv, std::cout, std::cerr); }
