#include "prophetlab/cli.hpp"

int main(int argc, char** argv) { return prophetlab::cli::run(argc, argv); }
