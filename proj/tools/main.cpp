#include "hst/cli.hpp"

int main(int argc, char** argv) { return hst::cli::run_cli(argc, argv); }
