#include "bcts/cli.hpp"

int main(int argc, char** argv) { return bcts::cli_main(argc, argv); }
