#include <iostream>

#include "netval/cli.hpp"

int main(int argc, char** argv) { return netval::run_cli(argc, argv, std::cout, std::cerr); }
