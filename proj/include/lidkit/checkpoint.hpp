#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "lidkit/model.hpp"
#include "lidkit/training.hpp"

namespace lidkit {

inline constexpr char kCheckpointMagic[4] = {'L', 'I', 'D', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Classifier model;
    TrainConfig config;  // settings the model was trained with
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

std::string serialize_checkpoint(const Classifier& model, const TrainConfig& config);

/// Throws IntegrityError on a bad magic, an unknown version, a checksum mismatch,
/// truncation or inconsistent shapes.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file in the same directory and renames it into place;
/// on failure no partial file is left behind (DataError).
void save_checkpoint(const Classifier& model, const TrainConfig& config, const std::filesystem::path& path);

/// DataError when the file cannot be read, IntegrityError when it is not a valid
/// checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lidkit
