#include "dpp/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return dpp::cli::run(argc, argv, std::cout, std::cerr); }
