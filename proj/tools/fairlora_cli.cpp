#include <string>
#include <vector>

#include "fairlora/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fairlora::run_cli(args);
}
