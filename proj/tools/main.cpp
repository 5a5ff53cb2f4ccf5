#include <iostream>

#include "driftcp/cli.hpp"

int main(int argc, char** argv) { return driftcp::run_cli(argc, argv, std::cout, std::cerr); }
