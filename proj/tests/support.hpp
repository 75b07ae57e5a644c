#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "mixsimplex.hpp"

namespace testing_support {

/// Counts per face in enumerate_faces order.
template <class Draw>
std::vector<double> face_counts(int k, std::size_t n, mixsimplex::Rng& g, Draw&& draw) {
  std::vector<double> counts(static_cast<std::size_t>((1U << k) - 1), 0.0);
  for (std::size_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(draw(g).mask() - 1)] += 1.0;
  return counts;
}

/// |observed - expected| in binomial standard errors.
inline double binomial_z(double count, double n, double p) {
  const double se = std::sqrt(n * p * (1.0 - p));
  return se > 0.0 ? std::abs(count - n * p) / se : std::abs(count - n * p);
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

/// Runs a shell command, capturing stdout.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace testing_support
