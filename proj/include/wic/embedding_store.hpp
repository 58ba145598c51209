#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wic/data_model.hpp"

namespace wic {

// Binary layout (little-endian):
//   "WICE" | u16 version=1 | u32 dimension | u64 record count
//   per record: u16 id length | id bytes | e1 as d x f32 | e2 as d x f32
inline constexpr char kStoreMagic[4] = {'W', 'I', 'C', 'E'};
inline constexpr std::uint16_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 4 + 2 + 4 + 8;

struct EmbeddingRecord {
  std::string instance_id;
  Eigen::VectorXf e1;
  Eigen::VectorXf e2;
};

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::uint32_t dimension, std::vector<EmbeddingRecord> records);

  [[nodiscard]] std::uint32_t dimension() const { return dimension_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] const std::vector<EmbeddingRecord>& records() const { return records_; }
  [[nodiscard]] const EmbeddingRecord* find(const std::string& instance_id) const;

 private:
  std::uint32_t dimension_ = 0;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Serialized size in bytes of a store with the given ids and dimension.
std::size_t store_file_size(std::span<const EmbeddingRecord> records, std::uint32_t dimension);

void write_store(std::span<const EmbeddingRecord> records, const std::filesystem::path& path);
EmbeddingStore read_store(const std::filesystem::path& path);
EmbeddingStore decode_store(std::span<const std::byte> bytes);

/// Debug export: instance_id then 2d float columns, 9 significant digits.
void export_store_tsv(const EmbeddingStore& store, const std::filesystem::path& path);

/// Row-aligned view of one task's instances joined with their embeddings.
struct TaskData {
  std::vector<std::string> ids;
  std::vector<std::string> languages;
  Eigen::MatrixXf e1;  // one row per instance
  Eigen::MatrixXf e2;
  Eigen::VectorXd targets;

  [[nodiscard]] Eigen::Index rows() const { return e1.rows(); }
  [[nodiscard]] Eigen::Index dimension() const { return e1.cols(); }
  [[nodiscard]] TaskData subset(std::span<const Eigen::Index> rows) const;
};

/// Joins task-eligible instances (in dataset order) with their embeddings.
/// Throws DataError listing up to 10 missing ids.
TaskData join(const Dataset& dataset, Task task, const EmbeddingStore& store);
TaskData join(std::span<const Instance* const> instances, Task task, const EmbeddingStore& store);

}  // namespace wic
