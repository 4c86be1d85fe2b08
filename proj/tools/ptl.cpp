#include "ptl/cli/commands.hpp"

int main(int argc, char** argv) { return ptl::cli::run_cli(argc, argv); }
