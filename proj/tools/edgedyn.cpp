#include "edyn/cli.hpp"

int main(int argc, char** argv) { return edyn::cli::main_entry(argc, argv); }
