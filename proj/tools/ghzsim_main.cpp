#include <string>
#include <vector>

#include "ghzsim/cli.hpp"

int main(int argc, char** argv) {
    return ghz::run_cli(std::vector<std::string>(argv, argv + argc));
}
