#include <iostream>

#include "fdcr/cli.hpp"

int main(int argc, char** argv)
{
    return fdcr::cli::run_cli(argc, argv, std::cout, std::cerr);
}
