#include "cli.hpp"

int main(int argc, char** argv) { return gandr::cli::main(argc, argv); }
