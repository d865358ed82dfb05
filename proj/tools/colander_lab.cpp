#include "colander/cli/app.hpp"

int main(int argc, char** argv) { return colander::cli::main(argc, argv); }
