#include "lvct/cli.hpp"

int main(int argc, char** argv) { return lvct::run_cli(argc, argv); }
