#include "mmndb/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mmndb::run_cli(argc, argv, std::cout, std::cerr); }
