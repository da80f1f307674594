#include "cli/commands.hpp"

int main(int argc, char** argv) { return priormvs::cli::run(argc, argv); }
