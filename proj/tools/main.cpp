#include "masq/cli.hpp"

int main(int argc, char** argv) { return masq::run_cli(argc, argv); }
