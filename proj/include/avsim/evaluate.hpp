#pragma once

#include <string>
#include <vector>

#include "avsim/config.hpp"
#include "avsim/metrics.hpp"
#include "avsim/sac.hpp"
#include "avsim/trajlog.hpp"

namespace avsim {

struct EvalResult {
    std::vector<ConfigMetrics> per_config;
    std::string metrics_csv_text;
    std::string metrics_path;     // empty when out_dir was empty
    std::string trajectory_path;
};

// Runs eval_episodes seeded episodes per configured scenario with the
// deterministic policy (tanh of the mean head). Episode seeds derive from
// (master seed, eval tag, eval_seed_base + index), disjoint from training
// seeds by construction. Episodes may run on `threads` workers; results are
// aggregated in episode order so artifacts are byte-stable.
EvalResult evaluate_policy(const RunConfig& cfg, const PolicyHandle& policy,
                           const std::string& out_dir, int threads = 2);

}  // namespace avsim
