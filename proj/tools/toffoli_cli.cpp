#include "cli_app.hpp"

int main(int argc, char** argv) { return toffoli::cli::run_cli(argc, argv); }
