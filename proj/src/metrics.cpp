#include "avsim/metrics.hpp"

#include <sstream>

#include "avsim/format.hpp"

namespace avsim {

ConfigMetrics aggregate_metrics(const std::string& configuration, const std::string& density_label,
                                const std::vector<EpisodeOutcome>& outcomes) {
    ConfigMetrics m;
    m.configuration = configuration;
    m.density_label = density_label;
    double success_time = 0.0;
    for (const EpisodeOutcome& o : outcomes) {
        switch (o.classification) {
            case Outcome::Success:
                ++m.successes;
                success_time += o.duration_s;
                break;
            case Outcome::Crash:
                ++m.crashes;
                break;
            case Outcome::OffRoad:
                ++m.offroad;
                break;
            case Outcome::Timeout:
                ++m.timeouts;
                break;
        }
    }
    const long n = m.episodes();
    m.success_rate = n > 0 ? static_cast<double>(m.successes) / static_cast<double>(n) : 0.0;
    if (m.successes > 0) {
        m.has_completion_time = true;
        m.completion_time_s = success_time / static_cast<double>(m.successes);
    }
    return m;
}

std::string metrics_csv(const std::vector<ConfigMetrics>& rows) {
    std::ostringstream os;
    os << "configuration,density_label,episodes,successes,crashes,offroad,timeouts,"
          "success_rate,completion_time_s\n";
    for (const ConfigMetrics& m : rows) {
        os << m.configuration << ',' << m.density_label << ',' << m.episodes() << ','
           << m.successes << ',' << m.crashes << ',' << m.offroad << ',' << m.timeouts << ','
           << format_double(m.success_rate) << ',';
        if (m.has_completion_time) os << format_double(m.completion_time_s);
        os << '\n';
    }
    return os.str();
}

}  // namespace avsim
