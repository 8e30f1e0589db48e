#pragma once

#include <string>
#include <vector>

#include "avsim/env.hpp"

namespace avsim {

struct ConfigMetrics {
    std::string configuration;
    std::string density_label;
    long successes = 0;
    long crashes = 0;
    long offroad = 0;
    long timeouts = 0;
    double success_rate = 0.0;
    bool has_completion_time = false;  // at least one success
    double completion_time_s = 0.0;    // mean over successful episodes only

    long episodes() const { return successes + crashes + offroad + timeouts; }
};

ConfigMetrics aggregate_metrics(const std::string& configuration, const std::string& density_label,
                                const std::vector<EpisodeOutcome>& outcomes);

// header + one row per configuration; completion time is blank when no
// episode succeeded
std::string metrics_csv(const std::vector<ConfigMetrics>& rows);

}  // namespace avsim
