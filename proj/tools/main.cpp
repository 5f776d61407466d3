#include "cli.hpp"

int main(int argc, char** argv) { return iama::cli_main(argc, argv); }
