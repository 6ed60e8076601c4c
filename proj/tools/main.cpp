#include "mlpf/cli.hpp"

int main(int argc, char** argv) { return mlpf::run_cli(argc, argv); }
