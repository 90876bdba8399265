#include "rbmad/cli.hpp"

int main(int argc, char** argv) { return rbmad::run_cli(argc, argv); }
