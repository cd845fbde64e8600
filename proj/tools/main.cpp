#include "cli.hpp"

int main(int argc, char** argv) { return weylwalk::cli::main_entry(argc, argv); }
