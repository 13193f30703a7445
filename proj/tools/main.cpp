#include "cli.hpp"

int main(int argc, char** argv) { return emssl::cli::run(argc, argv); }
