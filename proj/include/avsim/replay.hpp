#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "avsim/rng.hpp"
#include "avsim/transition.hpp"

namespace avsim {

// Proportional prioritized replay over a ring buffer. Sampling probability
// is priority^alpha_p / sum; a sum tree gives O(log n) draws and a min tree
// the buffer-wide maximum importance weight used for normalization.
class PrioritizedReplay {
public:
    PrioritizedReplay(std::size_t capacity, double alpha_p);

    // inserted at the running maximum priority so new samples get replayed
    void push(Transition t);

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }

    struct Sample {
        std::vector<const Transition*> items;
        std::vector<std::size_t> indices;
        std::vector<double> is_weights;  // (N P(i))^-beta / max over the buffer
    };

    // nullopt while size < batch (not ready)
    std::optional<Sample> sample(std::size_t batch, double beta_is, Rng& rng);

    void update_priorities(const std::vector<std::size_t>& indices,
                           const std::vector<double>& priorities);

    double priority(std::size_t index) const { return raw_priority_[index]; }
    const Transition& at(std::size_t index) const { return data_[index]; }

private:
    void tree_set(std::size_t index, double value);

    std::size_t capacity_;
    double alpha_p_;
    std::size_t tree_size_;          // leaves, power of two
    std::vector<double> sum_tree_;   // 2 * tree_size_
    std::vector<double> min_tree_;
    std::vector<Transition> data_;
    std::vector<double> raw_priority_;
    std::size_t next_slot_ = 0;
    double max_priority_ = 1.0;
};

}  // namespace avsim
