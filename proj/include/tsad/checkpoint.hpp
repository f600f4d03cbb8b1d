#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tsad/config.hpp"
#include "tsad/gan.hpp"

namespace tsad {

/// A trained detector: the networks with their feature pipeline and training
/// log, the configuration it was trained with, and calibration scores taken on
/// the training data.
struct Checkpoint {
    RunConfig config;
    GanModel model;
    std::vector<double> calibration;
};

inline constexpr char kCheckpointMagic[8] = {'M', 'A', 'D', 'G', 'A', 'N', '0', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian binary: magic, u32 version, then length-prefixed sections
/// (config text, feature pipeline, generator, discriminator, training log,
/// calibration). Reals are stored as raw IEEE-754 doubles.
void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace tsad
