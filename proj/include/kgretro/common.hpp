#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace kgretro {

// Bad user input: malformed files, unknown names, violated preconditions.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: singular systems, diverging objectives, non-finite
// values. Mapped to a distinct process exit code by the CLI.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Locale-independent formatting with 17 significant digits, enough for a
// double to round-trip exactly through text.
inline std::string fmt_g17(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw input_error("bad numeric field '" + std::string(s) + "' in " +
                      context);
  return v;
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// splitmix64; used to derive independent stream seeds from (seed, salt).
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Static-partition parallel map. Each index is processed exactly once and
// writes only to its own outputs, so results do not depend on thread count.
// The first exception thrown by any worker is rethrown to the caller.
inline void parallel_for(int threads, size_t n,
                         const std::function<void(size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const size_t nt = std::min<size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::mutex mu;
  std::exception_ptr first;
  for (size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (size_t i = t; i < n; i += nt) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace kgretro
