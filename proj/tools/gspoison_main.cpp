// SPDX-License-Identifier: Apache-2.0
#include "gspoison/cli.hpp"

int main(int argc, char** argv) { return gspoison::run_cli(argc, argv); }
