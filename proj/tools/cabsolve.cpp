/**
 * @file cabsolve.cpp
 * @brief Command-line entry point.
 */
#include "cabsolve_cli.hpp"

int main(int argc, char** argv) { return cab::cli::run_cli(argc, argv, std::cout, std::cerr); }
