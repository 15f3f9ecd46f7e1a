#include "groupcdl/cli/commands.hpp"

int main(int argc, char** argv) { return gcdl::run_cli(argc, argv); }
