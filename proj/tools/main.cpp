#include "cli.hpp"

int main(int argc, char **argv) { return prefchain::cli::run_cli(argc, argv); }
