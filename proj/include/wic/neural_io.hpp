#pragma once

#include <filesystem>
#include <span>

#include "wic/neural.hpp"

namespace wic::nn {

// Checkpoint layout (little-endian):
//   "WICM" | u16 version=1
//   u8 architecture | u8 task | u32 dim | u32 bottleneck | u32 hidden count | u32 x hidden
//   f64 dropout | u32 epochs | u32 batch size | f64 lr | f64 beta1 | f64 beta2 | f64 eps
//   f64 weight decay | u64 seed
//   u32 parameter count, then per parameter:
//     u16 name length | name | u32 rows | u32 cols | rows*cols f32 (row-major)
inline constexpr char kCheckpointMagic[4] = {'W', 'I', 'C', 'M'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename Scalar>
void save_checkpoint(Network<Scalar>& net, const TrainConfig& train, const std::filesystem::path& path);

struct LoadedNetwork {
  Network<float> network;
  TrainConfig train;
};

LoadedNetwork load_checkpoint(const std::filesystem::path& path);

/// TSV with columns epoch, train_loss, dev_metric ("NA" when undefined).
void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> log);

}  // namespace wic::nn
