#include "commands.hpp"

int main(int argc, char** argv) { return tripgrav::cli::run_cli(argc, argv); }
