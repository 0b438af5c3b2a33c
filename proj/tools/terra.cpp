#include "terra/harness/cli.hpp"

int main(int argc, char** argv) { return terra::harness::run_cli(argc, argv); }
