#include "wic/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "wic/error.hpp"

namespace wic {

static_assert(std::endian::native == std::endian::little,
              "embedding store I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), n);
    offset_ += n;
    return s;
  }

  void get_floats(float* dst, std::size_t n, const char* what) {
    need(n * sizeof(float), what);
    std::memcpy(dst, bytes_.data() + offset_, n * sizeof(float));
    offset_ += n * sizeof(float);
  }

  [[nodiscard]] std::size_t offset() const { return offset_; }
  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - offset_ < n) {
      throw FormatError("embedding store truncated at byte offset " + std::to_string(offset_) +
                        " while reading " + what + " (need " + std::to_string(n) + " bytes, " +
                        std::to_string(bytes_.size() - offset_) + " left)");
    }
  }

  std::span<const std::byte> bytes_;
  std::size_t offset_ = 0;
};

void validate_record(const EmbeddingRecord& r, std::uint32_t dimension) {
  if (r.e1.size() != dimension || r.e2.size() != dimension) {
    throw DataError("record '" + r.instance_id + "' has dimension " + std::to_string(r.e1.size()) +
                    "/" + std::to_string(r.e2.size()) + ", store dimension is " +
                    std::to_string(dimension));
  }
  if (!r.e1.allFinite() || !r.e2.allFinite()) {
    throw DataError("record '" + r.instance_id + "' has a non-finite component");
  }
  if (r.instance_id.size() > 0xFFFF) {
    throw DataError("instance id longer than 65535 bytes: '" + r.instance_id.substr(0, 32) + "...'");
  }
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::uint32_t dimension, std::vector<EmbeddingRecord> records)
    : dimension_(dimension), records_(std::move(records)) {
  if (dimension_ == 0) throw DataError("embedding dimension must be positive");
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_record(records_[i], dimension_);
    if (!index_.emplace(records_[i].instance_id, i).second) {
      throw DataError("duplicate instance id '" + records_[i].instance_id + "' in embedding store");
    }
  }
}

const EmbeddingRecord* EmbeddingStore::find(const std::string& instance_id) const {
  const auto it = index_.find(instance_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::size_t store_file_size(std::span<const EmbeddingRecord> records, std::uint32_t dimension) {
  std::size_t size = kStoreHeaderBytes;
  for (const auto& r : records) size += 2 + r.instance_id.size() + 2 * dimension * sizeof(float);
  return size;
}

void write_store(std::span<const EmbeddingRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw DataError("refusing to write an empty embedding store");
  const auto dimension = static_cast<std::uint32_t>(records.front().e1.size());
  if (dimension == 0) throw DataError("embedding dimension must be positive");
  for (const auto& r : records) validate_record(r, dimension);

  std::string out;
  out.reserve(store_file_size(records, dimension));
  out.append(kStoreMagic, 4);
  put(out, kStoreVersion);
  put(out, dimension);
  put(out, static_cast<std::uint64_t>(records.size()));
  for (const auto& r : records) {
    put(out, static_cast<std::uint16_t>(r.instance_id.size()));
    out += r.instance_id;
    out.append(reinterpret_cast<const char*>(r.e1.data()), dimension * sizeof(float));
    out.append(reinterpret_cast<const char*>(r.e2.data()), dimension * sizeof(float));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("write failed for " + path.string());
}

EmbeddingStore decode_store(std::span<const std::byte> bytes) {
  Reader in(bytes);
  const auto magic = in.get_string(4, "magic");
  if (std::memcmp(magic.data(), kStoreMagic, 4) != 0) {
    throw FormatError("not an embedding store (bad magic)");
  }
  const auto version = in.get<std::uint16_t>("version");
  if (version != kStoreVersion) {
    throw FormatError("unsupported embedding store version " + std::to_string(version));
  }
  const auto dimension = in.get<std::uint32_t>("dimension");
  const auto count = in.get<std::uint64_t>("record count");
  if (dimension == 0) throw FormatError("embedding store has dimension 0");

  // Each record needs at least 2 + 8d bytes; reject impossible counts before allocating.
  const std::size_t min_record = 2 + 2 * std::size_t{dimension} * sizeof(float);
  if (count > in.remaining() / min_record) {
    throw FormatError("embedding store truncated: header claims " + std::to_string(count) +
                      " records but file holds " + std::to_string(in.remaining()) +
                      " bytes after the header (byte offset " + std::to_string(in.offset()) + ")");
  }

  std::vector<EmbeddingRecord> records;
  records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingRecord r;
    const auto len = in.get<std::uint16_t>("id length");
    r.instance_id = in.get_string(len, "instance id");
    r.e1.resize(dimension);
    r.e2.resize(dimension);
    in.get_floats(r.e1.data(), dimension, "e1");
    in.get_floats(r.e2.data(), dimension, "e2");
    records.push_back(std::move(r));
  }
  if (in.remaining() != 0) {
    throw FormatError("embedding store has " + std::to_string(in.remaining()) +
                      " trailing bytes at byte offset " + std::to_string(in.offset()) +
                      " (header count " + std::to_string(count) + ")");
  }
  try {
    return EmbeddingStore(dimension, std::move(records));
  } catch (const FormatError&) {
    throw;
  } catch (const DataError& e) {
    throw FormatError(e.what());
  }
}

EmbeddingStore read_store(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open embedding store " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return decode_store(std::as_bytes(std::span<const char>(raw)));
}

void export_store_tsv(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::FILE* out = std::fopen(path.string().c_str(), "wb");
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : store.records()) {
    std::fputs(r.instance_id.c_str(), out);
    for (const auto* v : {&r.e1, &r.e2})
      for (Eigen::Index j = 0; j < v->size(); ++j) std::fprintf(out, "\t%.9g", (*v)[j]);
    std::fputc('\n', out);
  }
  std::fclose(out);
}

TaskData TaskData::subset(std::span<const Eigen::Index> rows) const {
  TaskData out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.e1.resize(n, e1.cols());
  out.e2.resize(n, e2.cols());
  out.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = rows[static_cast<std::size_t>(i)];
    out.ids.push_back(ids[static_cast<std::size_t>(r)]);
    out.languages.push_back(languages[static_cast<std::size_t>(r)]);
    out.e1.row(i) = e1.row(r);
    out.e2.row(i) = e2.row(r);
    out.targets[i] = targets[r];
  }
  return out;
}

TaskData join(std::span<const Instance* const> instances, Task task, const EmbeddingStore& store) {
  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  for (const auto* inst : instances) {
    if (!store.find(inst->instance_id)) {
      if (missing.size() < 10) missing.push_back(inst->instance_id);
      ++missing_count;
    }
  }
  if (missing_count > 0) {
    std::string msg = std::to_string(missing_count) + " instance(s) missing from embedding store:";
    for (const auto& id : missing) msg += " " + id;
    if (missing_count > missing.size()) msg += " ...";
    throw DataError(msg);
  }

  TaskData out;
  const auto n = static_cast<Eigen::Index>(instances.size());
  const auto d = static_cast<Eigen::Index>(store.dimension());
  out.e1.resize(n, d);
  out.e2.resize(n, d);
  out.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto* inst = instances[static_cast<std::size_t>(i)];
    const auto* rec = store.find(inst->instance_id);
    out.ids.push_back(inst->instance_id);
    out.languages.push_back(inst->language);
    out.e1.row(i) = rec->e1.transpose();
    out.e2.row(i) = rec->e2.transpose();
    out.targets[i] = inst->target(task);
  }
  return out;
}

TaskData join(const Dataset& dataset, Task task, const EmbeddingStore& store) {
  const auto instances = dataset.task_instances(task);
  return join(std::span<const Instance* const>(instances), task, store);
}

}  // namespace wic
