#include "commands.hpp"

int main(int argc, char** argv) { return das::cli::run_cli(argc, argv); }
