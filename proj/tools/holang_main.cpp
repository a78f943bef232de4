#include "holang/cli.hpp"

int main(int argc, char** argv) { return holang::cli::run(argc, argv); }
