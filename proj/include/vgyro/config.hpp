#pragma once

#include <cstdint>
#include <string>

#include "vgyro/pipeline.hpp"

namespace vgyro {

// Runtime settings mirrored from the module config keys; a plain-text
// key=value file plus per-key overrides (overrides win).
struct RunConfig {
    PipelineParams pipeline;
    std::uint64_t seed = 0;

    // Throws "config-parse" / "config-invalid".
    void apply_file(const std::string& path);
    void apply_kv(const std::string& key, const std::string& value);

    // One "key = value  (doc)" line per supported key.
    static std::string describe_keys();
};

}  // namespace vgyro
