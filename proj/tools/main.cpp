#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return msgd_lab::cli::run(argc, argv, std::cout, std::cerr); }
