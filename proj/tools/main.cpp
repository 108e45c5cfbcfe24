// Copyright Contributors to the quadlab project.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return quadlab::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
