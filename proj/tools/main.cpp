#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return adaptrack::cli::dispatch(argc, argv, std::cout, std::cerr);
}
