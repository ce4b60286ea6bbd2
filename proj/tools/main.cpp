#include <vector>

#include "lckasr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lckasr::run_cli(args);
}
