#pragma once

#include "phasedrift/types.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <optional>
#include <string>
#include <vector>

namespace phasedrift::detail {

template <class Result>
struct PathOutcome {
  std::vector<std::optional<Result>> results;
  std::vector<int> failed;
  std::vector<std::string> messages;
};

// Runs fn(i) for i in [0, n). threads == 1 gives a plain serial loop.
// Exceptions are captured per path; results stay indexed by path.
template <class Result, class Fn>
PathOutcome<Result> map_paths(int n, int threads, Fn&& fn) {
  PathOutcome<Result> out;
  out.results.resize(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  const auto body = [&](int i) {
    try {
      out.results[i] = fn(i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      out.results[i].reset();
    }
  };
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
  } else {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int i = 0; i < n; ++i) body(i);
  }
  for (int i = 0; i < n; ++i) {
    if (!out.results[i]) {
      out.failed.push_back(i);
      out.messages.push_back(errors[i].empty() ? "non-finite trajectory" : errors[i]);
    }
  }
  return out;
}

// Aborts when more than 1% of the paths failed.
inline void check_failures(int n, const std::vector<int>& failed,
                           const std::vector<std::string>& messages) {
  if (failed.empty()) return;
  if (static_cast<double>(failed.size()) <= 0.01 * n) return;
  std::string list;
  for (std::size_t i = 0; i < failed.size() && i < 20; ++i) {
    list += fmt::format("{}{} ({})", i ? ", " : "", failed[i], messages[i]);
  }
  if (failed.size() > 20) list += ", ...";
  throw NumericalError(
      fmt::format("{} of {} paths failed (limit 1%): {}", failed.size(), n, list));
}

}  // namespace phasedrift::detail
