#include "lowlogit/cli.hpp"

int main(int argc, char** argv) {
    return lowlogit::run_cli(argc, argv);
}
