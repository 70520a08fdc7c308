#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "psp/errors.hpp"
#include "psp/vector.hpp"

namespace psp {

/// Paired columns (P_x, P_y) harvested from operator applications, y = A x.
/// With a capacity set the history behaves as a ring buffer: the oldest
/// pair is evicted first.
class ProbeHistory {
 public:
  struct Pair {
    Vector x;
    Vector y;
  };

  explicit ProbeHistory(std::size_t n, std::optional<std::size_t> capacity = std::nullopt)
      : n_(n), capacity_(capacity) {
    if (capacity_ && *capacity_ == 0) throw ConfigError("probe history capacity must be >= 1");
  }

  std::size_t dimension() const noexcept { return n_; }
  /// Number of stored pairs (m).
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  std::optional<std::size_t> capacity() const noexcept { return capacity_; }
  /// Pairs ever recorded, including evicted ones.
  std::size_t total_recorded() const noexcept { return recorded_; }
  std::size_t evicted() const noexcept { return recorded_ - pairs_.size(); }

  std::size_t record(std::span<const double> x, std::span<const double> y) {
    detail::require_same_size(n_, x.size(), "probe_record x");
    detail::require_same_size(n_, y.size(), "probe_record y");
    pairs_.push_back({Vector(x.begin(), x.end()), Vector(y.begin(), y.end())});
    ++recorded_;
    if (capacity_ && pairs_.size() > *capacity_) pairs_.pop_front();
    return pairs_.size();
  }

  const Pair& operator[](std::size_t k) const { return pairs_[k]; }
  const Pair& at(std::size_t k) const { return pairs_.at(k); }

  auto begin() const noexcept { return pairs_.begin(); }
  auto end() const noexcept { return pairs_.end(); }

  void clear() noexcept { pairs_.clear(); }

 private:
  std::size_t n_;
  std::optional<std::size_t> capacity_;
  std::deque<Pair> pairs_;
  std::size_t recorded_ = 0;
};

}  // namespace psp
