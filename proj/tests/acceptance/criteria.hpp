#pragma once

#include <functional>
#include <string>
#include <vector>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& all_criteria();

}  // namespace acceptance
