#include "seqpipe/cli.hpp"

int main(int argc, char** argv) { return seqpipe::cli::run(argc, argv); }
