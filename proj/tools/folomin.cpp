#include "folomin/cli.hpp"

int main(int argc, char** argv) { return folomin::cli::main_entry(argc, argv); }
