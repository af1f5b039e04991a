#include "gnarx_cli/app.hpp"

int main(int argc, char** argv) { return gnarx::cli::run(argc, argv); }
