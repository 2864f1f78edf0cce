// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <cstdio>
#include <iostream>

#include "fracneu/acceptance.hpp"

int main() {
  using namespace fracneu::acceptance;
  Options opts;
  int failed = 0;
  run_all(opts, [&](const CriterionResult& r) {
    std::cout << format_line(r) << std::endl;
    if (!r.pass) ++failed;
  });
  std::cout << (failed ? std::to_string(failed) + " of 11 criteria failed" : std::string("all 11 criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
