#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ncelab {

/// FNV-1a 64-bit checksum, used to fingerprint output files in the manifest.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest text form of a double that round-trips exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Worker count from NCELAB_THREADS (default 1). Parallel sections only split
/// independent nodal writes, so results do not depend on this value.
inline int thread_count() {
  static const int n = [] {
    const char* s = std::getenv("NCELAB_THREADS");
    if (s == nullptr) return 1;
    int v = std::atoi(s);
    if (v < 1) v = 1;
    return std::min(v, 256);
  }();
  return n;
}

/// Runs body(begin, end) over a partition of [0, n). Falls back to a single
/// call for small n or a single worker.
template <class F>
void parallel_nodes(std::int64_t n, F&& body) {
  const int workers = thread_count();
  if (workers <= 1 || n < (std::int64_t{1} << 15)) {
    body(std::int64_t{0}, n);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const std::int64_t b = std::min<std::int64_t>(n, w * chunk);
    const std::int64_t e = std::min<std::int64_t>(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ncelab
