#include "cli.hpp"

int main(int argc, char** argv) { return mfcluster::cli::main_entry(argc, argv); }
