#include <iostream>

#include "xrm/cli.hpp"

int main(int argc, char** argv) { return xrm::cli::run(argc, argv, std::cout, std::cerr); }
