#include "cli.hpp"

int main(int argc, char** argv) { return spatialplus::cli::run(argc, argv); }
