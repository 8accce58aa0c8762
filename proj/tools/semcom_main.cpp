#include "semcom/cli.hpp"

int main(int argc, char** argv) { return semcom::cli_main(argc, argv); }
