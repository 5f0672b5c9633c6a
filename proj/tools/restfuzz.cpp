// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "restfuzz/cli.hpp"

int main(int argc, char** argv) {
    return restfuzz::run_cli(std::vector<std::string>(argv, argv + argc));
}
