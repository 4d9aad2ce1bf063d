#include "tlconv/cli.hpp"

int main(int argc, char** argv) { return tlconv::run_cli(argc, argv); }
