// SPDX-License-Identifier: Apache-2.0

#include "kdmc/harness/cli.hpp"

int main(int argc, char** argv)
{
    return kdmc::run_cli(argc, argv);
}
