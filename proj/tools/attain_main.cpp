#include "attain/cli.hpp"

int main(int argc, char** argv) { return attain::run_cli(argc, argv); }
