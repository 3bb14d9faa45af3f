#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return fedcache::cli::run_cli(argc, argv, std::cout, std::cerr); }
