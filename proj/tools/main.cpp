#include "hesslens/cli.hpp"

int main(int argc, char** argv) { return hesslens::cli_main(argc, argv); }
