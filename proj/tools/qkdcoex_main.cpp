#include "qkdcoex/cli.hpp"

int main(int argc, char** argv) { return qkdcoex::app::run_cli(argc, argv); }
