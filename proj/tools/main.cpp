#include <iostream>

#include "commitissue/cli.hpp"

int main(int argc, char** argv) { return commitissue::cli::dispatch(argc, argv, std::cout, std::cerr); }
