#include "polaron/cli.hpp"

int main(int argc, char** argv) { return polaron::cli::main(argc, argv); }
