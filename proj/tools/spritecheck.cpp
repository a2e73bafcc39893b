#include "spritecheck/cli.hpp"

int main(int argc, char** argv) { return spritecheck::run_cli(argc, argv); }
