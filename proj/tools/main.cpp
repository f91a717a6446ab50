#include "gmap/cli.hpp"

int main(int argc, char** argv) { return gmap::run_cli(argc, argv); }
