#include "hmx/cli/run.hpp"

int main(int argc, char** argv) { return hmx::cli::main(argc, argv); }
