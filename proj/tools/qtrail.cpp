#include "qtrail/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return qtrail::run_cli(argc, argv, std::cout, std::cerr); }
