// SPDX-License-Identifier: Apache-2.0
#include "lmtc/cli.hpp"

int main(int argc, char** argv) { return lmtc::cli::run(argc, argv); }
