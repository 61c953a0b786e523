#pragma once

/// \file
/// Prioritised experience replay over a fixed-capacity ring buffer.
/// Sampling probability is priority^alpha / sum priority^alpha, kept in a sum tree.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "neuradp/common.hpp"

namespace neuradp {

/// Binary sum tree over `capacity` leaves.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity) : leaves_(1) {
    while (leaves_ < capacity) leaves_ <<= 1;
    nodes_.assign(2 * leaves_, 0.0);
  }

  void set(std::size_t i, double w) {
    std::size_t k = i + leaves_;
    nodes_[k] = w;
    // Recompute parents from children so rounding never accumulates.
    for (k >>= 1; k >= 1; k >>= 1) nodes_[k] = nodes_[2 * k] + nodes_[2 * k + 1];
  }
  [[nodiscard]] double get(std::size_t i) const { return nodes_[i + leaves_]; }
  [[nodiscard]] double total() const { return nodes_[1]; }

  /// Leaf whose cumulative interval contains u, for u in [0, total).
  [[nodiscard]] std::size_t find(double u) const {
    std::size_t k = 1;
    while (k < leaves_) {
      const double left = nodes_[2 * k];
      if (u < left || nodes_[2 * k + 1] <= 0.0) {
        k = 2 * k;
      } else {
        u -= left;
        k = 2 * k + 1;
      }
    }
    return k - leaves_;
  }

 private:
  std::size_t leaves_;
  std::vector<double> nodes_;
};

struct ReplayConfig {
  std::size_t capacity = 10000;
  double alpha = 0.6;
  double beta_start = 0.4;
  double beta_end = 1.0;
  /// Sample calls over which beta anneals linearly.
  std::int64_t beta_anneal_samples = 1;
  double epsilon = 1e-2;
};

/// Stable handle to a stored entry; `serial` detects eviction.
struct ReplayIndex {
  std::size_t slot = 0;
  std::uint64_t serial = 0;
};

template <typename T>
struct ReplaySample {
  std::vector<const T*> items;
  std::vector<double> weights;
  std::vector<ReplayIndex> indices;
};

template <typename T>
class ReplayMemory {
 public:
  explicit ReplayMemory(ReplayConfig cfg = {}) : cfg_(cfg), tree_(std::max<std::size_t>(1, cfg.capacity)) {
    if (cfg_.capacity == 0) throw ContractError("replay capacity must be positive");
    if (!(cfg_.epsilon > 0.0)) throw ContractError("replay epsilon must be positive");
    if (!(cfg_.alpha >= 0.0)) throw ContractError("replay alpha must be nonnegative");
    items_.reserve(std::min<std::size_t>(cfg_.capacity, 4096));
  }

  void push(T item) {
    const std::size_t slot = pushes_ % cfg_.capacity;
    if (slot < items_.size()) {
      items_[slot] = Entry{std::move(item), max_priority_, pushes_};
      ++evictions_;
    } else {
      items_.push_back(Entry{std::move(item), max_priority_, pushes_});
    }
    tree_.set(slot, std::pow(max_priority_, cfg_.alpha));
    ++pushes_;
  }

  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] std::size_t capacity() const { return cfg_.capacity; }
  [[nodiscard]] std::uint64_t pushes() const { return pushes_; }
  [[nodiscard]] std::uint64_t evictions() const { return evictions_; }
  [[nodiscard]] std::uint64_t stale_updates() const { return stale_; }
  [[nodiscard]] double max_priority() const { return max_priority_; }
  [[nodiscard]] const ReplayConfig& config() const { return cfg_; }

  [[nodiscard]] double priority(std::size_t slot) const { return items_.at(slot).priority; }
  [[nodiscard]] double probability(std::size_t slot) const { return tree_.get(slot) / tree_.total(); }
  [[nodiscard]] const T& at(std::size_t slot) const { return items_.at(slot).item; }
  [[nodiscard]] ReplayIndex index_of(std::size_t slot) const { return {slot, items_.at(slot).serial}; }

  [[nodiscard]] double beta() const {
    const double frac = std::min(1.0, static_cast<double>(sample_calls_) /
                                          static_cast<double>(std::max<std::int64_t>(1, cfg_.beta_anneal_samples)));
    return cfg_.beta_start + (cfg_.beta_end - cfg_.beta_start) * frac;
  }

  /// n independent draws with replacement.
  ReplaySample<T> sample(std::size_t n, Rng& rng, std::optional<double> beta_override = std::nullopt) {
    if (n > items_.size() || n == 0) throw ContractError("replay holds fewer entries than requested");
    const double b = beta_override.value_or(beta());
    ++sample_calls_;
    const double total = tree_.total();
    const double count = static_cast<double>(items_.size());
    std::uniform_real_distribution<double> u(0.0, total);
    ReplaySample<T> out;
    double wmax = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t slot = tree_.find(u(rng));
      slot = std::min(slot, items_.size() - 1);
      const double p = tree_.get(slot) / total;
      const double w = std::pow(count * p, -b);
      wmax = std::max(wmax, w);
      out.items.push_back(&items_[slot].item);
      out.weights.push_back(w);
      out.indices.push_back({slot, items_[slot].serial});
    }
    for (double& w : out.weights) w /= wmax;
    return out;
  }

  ReplaySample<T> sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return sample(n, rng);
  }

  /// priority = |td| + epsilon. Entries evicted since sampling are skipped and counted.
  void update_priorities(const std::vector<ReplayIndex>& indices, const std::vector<double>& td_errors) {
    if (indices.size() != td_errors.size()) throw ContractError("index/error count mismatch");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const ReplayIndex& ix = indices[k];
      if (ix.slot >= items_.size() || items_[ix.slot].serial != ix.serial) {
        ++stale_;
        continue;
      }
      if (!std::isfinite(td_errors[k])) throw NumericError("non-finite TD error in priority update");
      const double p = std::abs(td_errors[k]) + cfg_.epsilon;
      items_[ix.slot].priority = p;
      max_priority_ = std::max(max_priority_, p);
      tree_.set(ix.slot, std::pow(p, cfg_.alpha));
    }
  }

 private:
  struct Entry {
    T item;
    double priority;
    std::uint64_t serial;
  };

  ReplayConfig cfg_;
  SumTree tree_;
  std::vector<Entry> items_;
  double max_priority_ = 1.0;
  std::uint64_t pushes_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t stale_ = 0;
  std::int64_t sample_calls_ = 0;
};

}  // namespace neuradp
