#include <iostream>

#include "mhq/cli.hpp"

int main(int argc, char** argv) { return mhq::cli::run(argc, argv, std::cout, std::cerr); }
