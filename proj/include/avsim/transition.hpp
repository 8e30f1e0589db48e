#pragma once

#include <array>
#include <vector>

namespace avsim {

// Replay-buffer element. `done` is true only on real termination; truncated
// episodes store done = false so bootstrapping continues through the cut.
struct Transition {
    std::vector<double> s;
    std::array<double, 2> a{0.0, 0.0};
    double r = 0.0;
    std::vector<double> s2;
    bool done = false;
    int config_id = 0;
};

}  // namespace avsim
