#include "nnet/cli.hpp"

int main(int argc, char** argv) { return nnet::cli_main(argc, argv); }
