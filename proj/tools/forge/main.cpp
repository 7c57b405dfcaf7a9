#include "cli.hpp"

int main(int argc, char** argv) { return forge::cli::main(argc, argv); }
