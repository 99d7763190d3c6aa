#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <new>
#include <vector>

namespace lov::memory {

namespace detail {
inline std::atomic<std::int64_t> g_current{0};
inline std::atomic<std::int64_t> g_peak{0};

inline void record_alloc(std::int64_t bytes) {
  const std::int64_t now = g_current.fetch_add(bytes) + bytes;
  std::int64_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

inline void record_free(std::int64_t bytes) { g_current.fetch_sub(bytes); }
}  // namespace detail

/// Bytes currently held by tracked buffers.
inline std::int64_t current_bytes() { return detail::g_current.load(); }

/// Allocator that reports every grid buffer to a process-wide byte counter.
/// All grid and cost-volume storage in the library goes through it, so
/// PeakScope sees exactly the buffers a construction allocates.
template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    auto* p = static_cast<T*>(::operator new(n * sizeof(T)));
    detail::record_alloc(static_cast<std::int64_t>(n * sizeof(T)));
    return p;
  }

  void deallocate(T* p, std::size_t n) noexcept {
    detail::record_free(static_cast<std::int64_t>(n * sizeof(T)));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using TrackedVector = std::vector<T, TrackingAllocator<T>>;

/// Measures the high-water mark of tracked allocations made while the scope
/// is alive, relative to the bytes already held when it was opened.
/// Scopes do not nest.
class PeakScope {
 public:
  PeakScope() : baseline_(current_bytes()) { detail::g_peak.store(baseline_); }

  std::int64_t peak_bytes() const { return detail::g_peak.load() - baseline_; }

 private:
  std::int64_t baseline_;
};

}  // namespace lov::memory
