#include <iostream>

#include "magicgeo/cli/app.hpp"

int main(int argc, char** argv) { return magicgeo::cli::run(argc, argv, std::cout, std::cerr); }
