#include "polartof/io/cli.hpp"

int main(int argc, char** argv) { return polartof::run_cli(argc, argv); }
