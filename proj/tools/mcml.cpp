#include <string>
#include <vector>

#include "mcml/harness.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mcml::harness::cli_main(args);
}
