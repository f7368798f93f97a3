#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

namespace rmdp {

struct TraceRecord {
  int iter = 0;
  std::int64_t update_count = 0;  // primal plus dual updates so far
  double phi = 0.0;
  double stat_res_pi = 0.0;
  double stat_res_p = 0.0;
  double wall_ms = 0.0;
};

struct RunTrace {
  std::vector<TraceRecord> records;

  double initial_phi() const { return records.front().phi; }
  double final_phi() const { return records.back().phi; }
  // Trapezoidal area under phi against update_count.
  double area_under_curve() const;
  // Smallest recorded max(stat_res_pi, stat_res_p) with iter <= max_iter.
  double min_stationarity(int max_iter) const;
};

// Milliseconds since construction, or zero when timing is disabled so that
// traces stay byte-reproducible.
class Stopwatch {
 public:
  explicit Stopwatch(bool enabled)
      : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}

  double elapsed_ms() const {
    if (!enabled_) return 0.0;
    const auto dt = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double, std::milli>(dt).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace rmdp
