#include "cgaug/cli.hpp"

int main(int argc, char** argv) { return cgaug::run_cli(argc, argv); }
