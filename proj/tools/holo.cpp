#include "holo/io/cli.hpp"

int main(int argc, char** argv) { return holo::io::cli_main(argc, argv); }
