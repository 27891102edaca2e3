#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "hierlab/replay/records.hpp"
#include "hierlab/rng.hpp"

namespace hierlab::replay {

inline constexpr std::size_t kDefaultCapacity = 1'000'000;

/// Fixed-capacity FIFO ring of records.
template <typename Record>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  void append(Record record) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(record));
    } else {
      items_[cursor_] = std::move(record);
    }
    cursor_ = (cursor_ + 1) % capacity_;
    ++appended_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  std::size_t total_appended() const { return appended_; }

  /// i = 0 is the oldest retained record.
  const Record& operator[](std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("replay buffer index");
    return items_.size() < capacity_ ? items_[i] : items_[(cursor_ + i) % capacity_];
  }

  const Record& sample_one(Rng& rng) const {
    if (items_.empty()) throw std::logic_error("sample from empty replay buffer");
    return items_[rng.index(items_.size())];
  }

  /// Uniform with replacement.
  std::vector<Record> sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("sample from empty replay buffer");
    std::vector<Record> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(items_[rng.index(items_.size())]);
    return out;
  }

  void clear() {
    items_.clear();
    cursor_ = 0;
  }

 private:
  std::size_t capacity_;
  std::vector<Record> items_;
  std::size_t cursor_ = 0;
  std::size_t appended_ = 0;
};

template <typename Record>
struct MixedBatch {
  std::vector<Record> records;
  std::vector<bool> from_a;  // provenance per record
};

/// Exactly round(batch_size * fraction_a) records drawn uniformly from `a`,
/// the remainder from `b`, then shuffled together.
template <typename Record>
MixedBatch<Record> sample_mixed(const ReplayBuffer<Record>& a, const ReplayBuffer<Record>& b, std::size_t batch_size,
                                double fraction_a, Rng& rng) {
  if (!(fraction_a >= 0.0 && fraction_a <= 1.0)) throw std::invalid_argument("sample_mixed: fraction outside [0, 1]");
  const double exact = static_cast<double>(batch_size) * fraction_a;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9) throw std::invalid_argument("sample_mixed: batch split is not integral");
  const auto na = static_cast<std::size_t>(rounded);
  const std::size_t nb = batch_size - na;
  if ((na > 0 && a.empty()) || (nb > 0 && b.empty())) throw std::logic_error("sample_mixed: empty buffer");
  std::vector<std::pair<const Record*, bool>> picks;
  picks.reserve(batch_size);
  for (std::size_t i = 0; i < na; ++i) picks.emplace_back(&a.sample_one(rng), true);
  for (std::size_t i = 0; i < nb; ++i) picks.emplace_back(&b.sample_one(rng), false);
  std::shuffle(picks.begin(), picks.end(), rng.engine());
  MixedBatch<Record> out;
  out.records.reserve(batch_size);
  for (auto& [rec, src] : picks) {
    out.records.push_back(*rec);
    out.from_a.push_back(src);
  }
  return out;
}

// Line-oriented dumps: one record per line, tab-separated fields, vector
// components separated by spaces.
namespace detail {
inline void put(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
}
}  // namespace detail

inline void write_line(std::ostream& os, const Transition& t) {
  detail::put(os, t.s);
  os << '\t';
  detail::put(os, t.a);
  os << '\t' << t.r << '\t';
  detail::put(os, t.s_next);
  os << '\t' << t.done << '\t' << t.horizon << '\n';
}

inline void write_line(std::ostream& os, const GoalTransition& t) {
  detail::put(os, t.s);
  os << '\t';
  detail::put(os, t.g);
  os << '\t' << t.anchor.x() << ' ' << t.anchor.y() << '\t';
  detail::put(os, t.a);
  os << '\t' << t.r_int << '\t';
  detail::put(os, t.s_next);
  os << '\t';
  detail::put(os, t.g_next);
  os << '\t' << t.done << '\n';
}

inline void write_line(std::ostream& os, const CStepTransition& t) {
  detail::put(os, t.s);
  os << '\t';
  detail::put(os, t.goal);
  os << '\t' << t.option << '\t' << t.r_sum << '\t';
  detail::put(os, t.s_next);
  os << '\t' << t.done << '\t' << t.horizon << '\t' << t.nominal_horizon << '\n';
}

template <typename Record>
void dump(std::ostream& os, const ReplayBuffer<Record>& buffer) {
  for (std::size_t i = 0; i < buffer.size(); ++i) write_line(os, buffer[i]);
}

}  // namespace hierlab::replay
