// Built against the double-precision library; exposes a plain entry point so
// the single-precision acceptance binary can call it without sharing types.
#include <chrono>
#include <sstream>
#include <string>

#include "gradcheck.hpp"

bool acceptance_a4(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t checks = 0;
  std::size_t entries = 0;
  std::size_t refined = 0;
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    auto results = gradcheck::cells(1000 + draw);
    results.push_back(gradcheck::end_to_end(1000 + draw));
    for (const auto& r : results) {
      ++checks;
      entries += r.entries;
      refined += r.refined;
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        worst_name = r.name;
      }
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream out;
  out << "100 draws, " << checks << " checks over " << entries << " entries, max relative error " << worst << " ("
      << (worst_name.empty() ? "none" : worst_name) << "), " << refined << " entries re-measured at h = 1e-4, "
      << seconds << " s";
  detail = out.str();
  return worst <= gradcheck::kTolerance && seconds < 120.0;
}
