#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "avsim/neural.hpp"

namespace avsim {

// Binary checkpoint: magic "AVCP", u32 version, length-prefixed JSON
// manifest, then named tensors as row-major 64-bit floats. Save/load
// round-trips are bit-exact.
void save_checkpoint(const std::string& path, const std::string& manifest_json,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors);

struct Checkpoint {
    std::string manifest_json;
    std::map<std::string, Tensor> tensors;
};

Checkpoint load_checkpoint(const std::string& path);  // throws Error(Io)

}  // namespace avsim
