#include "rcaforge/cli.hpp"

int main(int argc, char** argv) { return rcaforge::cli_main(argc, argv); }
