#include "avsim/replay.hpp"

#include <cmath>
#include <limits>

#include "avsim/errors.hpp"

namespace avsim {

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, double alpha_p)
    : capacity_(capacity), alpha_p_(alpha_p) {
    if (capacity == 0) throw Error(ErrorKind::Config, "replay capacity must be > 0");
    tree_size_ = 1;
    while (tree_size_ < capacity_) tree_size_ <<= 1;
    sum_tree_.assign(2 * tree_size_, 0.0);
    min_tree_.assign(2 * tree_size_, std::numeric_limits<double>::infinity());
}

void PrioritizedReplay::tree_set(std::size_t index, double value) {
    std::size_t node = index + tree_size_;
    sum_tree_[node] = value;
    min_tree_[node] = data_.empty() || index >= data_.size()
                          ? std::numeric_limits<double>::infinity()
                          : value;
    node >>= 1;
    while (node >= 1) {
        sum_tree_[node] = sum_tree_[2 * node] + sum_tree_[2 * node + 1];
        min_tree_[node] = std::min(min_tree_[2 * node], min_tree_[2 * node + 1]);
        if (node == 1) break;
        node >>= 1;
    }
}

void PrioritizedReplay::push(Transition t) {
    const std::size_t slot = next_slot_;
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
        raw_priority_.push_back(max_priority_);
    } else {
        data_[slot] = std::move(t);
        raw_priority_[slot] = max_priority_;
    }
    tree_set(slot, std::pow(max_priority_, alpha_p_));
    next_slot_ = (slot + 1) % capacity_;
}

std::optional<PrioritizedReplay::Sample> PrioritizedReplay::sample(std::size_t batch,
                                                                   double beta_is, Rng& rng) {
    if (data_.size() < batch) return std::nullopt;

    const double total = sum_tree_[1];
    const double n = static_cast<double>(data_.size());
    const double p_min = min_tree_[1] / total;
    const double max_weight = std::pow(n * p_min, -beta_is);

    Sample out;
    out.items.reserve(batch);
    out.indices.reserve(batch);
    out.is_weights.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
        double u = rng.uniform() * total;
        std::size_t node = 1;
        while (node < tree_size_) {
            const std::size_t left = 2 * node;
            if (u <= sum_tree_[left] || sum_tree_[left + 1] <= 0.0) {
                node = left;
            } else {
                u -= sum_tree_[left];
                node = left + 1;
            }
        }
        std::size_t index = node - tree_size_;
        if (index >= data_.size()) index = data_.size() - 1;  // float edge
        const double p = sum_tree_[node] / total;
        out.items.push_back(&data_[index]);
        out.indices.push_back(index);
        out.is_weights.push_back(std::pow(n * p, -beta_is) / max_weight);
    }
    return out;
}

void PrioritizedReplay::update_priorities(const std::vector<std::size_t>& indices,
                                          const std::vector<double>& priorities) {
    if (indices.size() != priorities.size()) {
        throw Error(ErrorKind::Usage, "update_priorities: size mismatch");
    }
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const double p = priorities[k];
        if (!(p > 0.0)) throw Error(ErrorKind::Usage, "update_priorities: priority must be > 0");
        raw_priority_[indices[k]] = p;
        tree_set(indices[k], std::pow(p, alpha_p_));
        if (p > max_priority_) max_priority_ = p;
    }
}

}  // namespace avsim
