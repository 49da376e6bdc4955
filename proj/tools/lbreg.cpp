#include "lbreg/cli.hpp"

int main(int argc, char** argv) { return lbreg::cli::run_cli(argc, argv); }
