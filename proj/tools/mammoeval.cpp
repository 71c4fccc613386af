#include "mammoeval/cli.hpp"

int main(int argc, char** argv) { return mammoeval::cli::run(argc, argv); }
