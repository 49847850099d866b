#include <iostream>

#include "dmaprobe/cli.hpp"

int main(int argc, char** argv) { return dmaprobe::cli::run(argc, argv, std::cout, std::cerr); }
