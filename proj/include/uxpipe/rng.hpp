#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace uxpipe {

// mt19937_64 with hand-rolled bounded draws: std distributions differ
// between standard libraries, this does not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) std::swap(v[i], v[below(i + 1)]);
  }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(static_cast<int>(v.size()))];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uxpipe
