#pragma once

// Heap allocation counter for tests. Include from exactly one translation
// unit per test binary: it defines malloc. glibc lets the executable
// interpose malloc while the real allocator stays reachable.

#include <algorithm>
#include <cstddef>

#if defined(__GLIBC__)
#define KOCL_COUNT_ALLOCS 1

extern "C" void* __libc_malloc(std::size_t);

namespace alloc_counter {
inline bool counting = false;
inline std::size_t count = 0;
inline std::size_t largest = 0;

/// Counts allocations while alive.
struct Scope {
  Scope() {
    count = 0;
    largest = 0;
    counting = true;
  }
  ~Scope() { counting = false; }
};
}  // namespace alloc_counter

extern "C" void* malloc(std::size_t n) {
  if (alloc_counter::counting) {
    ++alloc_counter::count;
    alloc_counter::largest = std::max(alloc_counter::largest, n);
  }
  return __libc_malloc(n);
}
#endif
