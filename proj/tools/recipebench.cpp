#include "recipebench/cli.hpp"

int main(int argc, char** argv) { return recipebench::cli::run_cli(argc, argv); }
