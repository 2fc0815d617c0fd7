#include "qsgan/cli.hpp"

int main(int argc, char** argv) { return qsgan::cli::run_cli(argc, argv); }
