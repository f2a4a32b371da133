// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

// Runs the acceptance criteria against the reference checkpoint given as
// the first argument (trained and saved there when missing).

#include <iostream>

#include "ntta/acceptance.hpp"

int main(int argc, char** argv) {
  ntta::AcceptanceOptions options;
  if (argc > 1) options.checkpoint = argv[1];
  const auto results = ntta::run_acceptance(options, std::cout, true);
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
