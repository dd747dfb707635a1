#include "lorenz/cli.hpp"

int main(int argc, char** argv) { return lorenz::cli_main(argc, argv); }
