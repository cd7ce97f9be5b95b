#include "fcopf/cli.hpp"

int main(int argc, char** argv) { return fcopf::cli_main(argc, argv); }
