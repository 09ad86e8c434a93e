#include "commands.hpp"

int main(int argc, char** argv) { return varopt::cli::run(argc, argv); }
