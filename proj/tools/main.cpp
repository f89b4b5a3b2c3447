#include <iostream>

#include "wextrap_cli.hpp"

int main(int argc, char** argv)
{
    return wextrap::cli::run_cli(argc, argv, std::cout, std::cerr);
}
