#pragma once

#include <atomic>
#include <limits>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace finfocal {

inline constexpr const char* kToolName = "finfocal";
inline constexpr const char* kToolVersion = "0.3.1";

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Error taxonomy. Numeric routines throw; the CLI maps these to exit codes.
// ---------------------------------------------------------------------------

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

#define FINFOCAL_ERROR(NAME)                                          \
  struct NAME : NumericError {                                        \
    explicit NAME(const std::string& what = #NAME)                    \
        : NumericError(std::string(#NAME) + ": " + what) {}           \
  }

FINFOCAL_ERROR(ZeroVector);
FINFOCAL_ERROR(NotPositiveDefinite);
FINFOCAL_ERROR(NewtonDivergence);
FINFOCAL_ERROR(DegenerateTangent);
FINFOCAL_ERROR(StepUnderflow);
FINFOCAL_ERROR(ConstraintDrift);
FINFOCAL_ERROR(InsufficientSamples);
FINFOCAL_ERROR(PathMismatch);
FINFOCAL_ERROR(NotInKernel);
FINFOCAL_ERROR(UnresolvedZeroCluster);
FINFOCAL_ERROR(EndpointIsFocal);
FINFOCAL_ERROR(HorizonTooSmall);
FINFOCAL_ERROR(NotRegular);
FINFOCAL_ERROR(InsufficientNeighbors);
FINFOCAL_ERROR(MeshTooCoarse);
FINFOCAL_ERROR(OutOfBox);
FINFOCAL_ERROR(NoConvergentFoot);
FINFOCAL_ERROR(WitnessNotFound);
FINFOCAL_ERROR(OracleFailure);
FINFOCAL_ERROR(ConfigError);

#undef FINFOCAL_ERROR

// ---------------------------------------------------------------------------
// Logging (stderr, level from FINFOCAL_LOG: quiet|info|debug)
// ---------------------------------------------------------------------------

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* e = std::getenv("FINFOCAL_LOG");
    if (!e) return LogLevel::Quiet;
    std::string s(e);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    return LogLevel::Quiet;
  }();
  return lvl;
}

template <class... Args>
void log_info(const char* fmt, Args... args) {
  if (log_level() >= LogLevel::Info) {
    std::fprintf(stderr, "[finfocal] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

// ---------------------------------------------------------------------------
// Deterministic parallel loop: results must be stored by index by the caller.
// ---------------------------------------------------------------------------

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<int> first_bad{count};
  std::vector<std::string> what(static_cast<size_t>(count));
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        what[static_cast<size_t>(i)] = e.what();
        int cur = first_bad.load();
        while (i < cur && !first_bad.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };
  std::vector<std::thread> pool;
  int nt = std::min(threads, count);
  pool.reserve(static_cast<size_t>(nt));
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  int bad = first_bad.load();
  if (bad < count) throw NumericError(what[static_cast<size_t>(bad)]);
}

inline int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// FNV-1a, used to fingerprint scenario files in summaries.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

}  // namespace finfocal
