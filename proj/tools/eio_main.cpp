#include "eio/cli.hpp"

int main(int argc, char** argv) { return eio::run_cli(argc, argv); }
