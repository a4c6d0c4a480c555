#include "strata_icer/cli.hpp"

int main(int argc, char** argv) { return strata_icer::cli::run(argc, argv); }
