#include <string>
#include <vector>

#include "groupsearch/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return groupsearch::cli_main(args);
}
