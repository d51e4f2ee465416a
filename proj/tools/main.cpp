#include "transferda/cli.hpp"

int main(int argc, char** argv) { return tda::cli_main(argc, argv); }
