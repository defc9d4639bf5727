#include "mertenslab/cli.hpp"

int main(int argc, char** argv) { return mertenslab::run_cli(argc, argv); }
