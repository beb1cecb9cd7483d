#pragma once

#include <filesystem>

#include "qtrade/qnet.hpp"

namespace qtrade {

/// Binary parameter checkpoint: magic, format version, architecture header,
/// then each named array with its shape and raw little-endian doubles.
/// save followed by load is bit-exact.
void save_checkpoint(const std::filesystem::path& path,
                     const NetworkParams& params, const NetConfig& config);

struct Checkpoint {
    NetworkParams params;
    NetConfig config;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qtrade
