#include "graftnet/cli.hpp"

int main(int argc, char** argv) { return graftnet::cli_main(argc, argv); }
