#include "wic/neural_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace wic::nn {

namespace {

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes_.append(raw, sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) { bytes_.append(static_cast<const char*>(data), n); }
  [[nodiscard]] const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

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
    std::string s(bytes_.data() + offset_, n);
    offset_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return offset_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - offset_ < n) {
      throw FormatError("checkpoint truncated at byte offset " + std::to_string(offset_) + " while reading " + what);
    }
  }
  std::vector<char> bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

template <typename Scalar>
void save_checkpoint(Network<Scalar>& net, const TrainConfig& train, const std::filesystem::path& path) {
  const auto& cfg = net.config();
  Writer w;
  w.put_bytes(kCheckpointMagic, 4);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint8_t>(cfg.architecture));
  w.put(static_cast<std::uint8_t>(cfg.task == Task::ogwic ? 0 : 1));
  w.put(static_cast<std::uint32_t>(cfg.dim));
  w.put(static_cast<std::uint32_t>(cfg.bottleneck));
  w.put(static_cast<std::uint32_t>(cfg.hidden.size()));
  for (auto h : cfg.hidden) w.put(static_cast<std::uint32_t>(h));
  w.put(cfg.dropout);
  w.put(static_cast<std::uint32_t>(train.epochs));
  w.put(static_cast<std::uint32_t>(train.batch_size));
  w.put(train.optimizer.learning_rate);
  w.put(train.optimizer.beta1);
  w.put(train.optimizer.beta2);
  w.put(train.optimizer.eps);
  w.put(train.optimizer.weight_decay);
  w.put(train.seed);

  const auto params = net.parameters();
  w.put(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.put(static_cast<std::uint16_t>(p->name.size()));
    w.put_bytes(p->name.data(), p->name.size());
    w.put(static_cast<std::uint32_t>(p->value.rows()));
    w.put(static_cast<std::uint32_t>(p->value.cols()));
    for (Index r = 0; r < p->value.rows(); ++r)
      for (Index c = 0; c < p->value.cols(); ++c) w.put(static_cast<float>(p->value(r, c)));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("write failed for " + path.string());
}

template void save_checkpoint(Network<float>&, const TrainConfig&, const std::filesystem::path&);
template void save_checkpoint(Network<double>&, const TrainConfig&, const std::filesystem::path&);

LoadedNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open checkpoint " + path.string());
  Reader in(std::vector<char>((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>()));

  if (in.get_string(4, "magic") != std::string(kCheckpointMagic, 4)) {
    throw FormatError(path.string() + ": not a model checkpoint (bad magic)");
  }
  if (const auto v = in.get<std::uint16_t>("version"); v != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(v));
  }
  NetworkConfig cfg;
  const auto arch = in.get<std::uint8_t>("architecture");
  if (arch != 1 && arch != 2) throw FormatError("unknown architecture code " + std::to_string(arch));
  cfg.architecture = static_cast<Architecture>(arch);
  const auto task = in.get<std::uint8_t>("task");
  if (task > 1) throw FormatError("unknown task code " + std::to_string(task));
  cfg.task = task == 0 ? Task::ogwic : Task::diswic;
  cfg.dim = in.get<std::uint32_t>("dim");
  cfg.bottleneck = in.get<std::uint32_t>("bottleneck");
  const auto n_hidden = in.get<std::uint32_t>("hidden count");
  if (n_hidden > 64) throw FormatError("implausible hidden layer count " + std::to_string(n_hidden));
  cfg.hidden.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i) cfg.hidden.push_back(in.get<std::uint32_t>("hidden size"));
  cfg.dropout = in.get<double>("dropout");

  TrainConfig train;
  train.epochs = static_cast<int>(in.get<std::uint32_t>("epochs"));
  train.batch_size = static_cast<int>(in.get<std::uint32_t>("batch size"));
  train.optimizer.learning_rate = in.get<double>("learning rate");
  train.optimizer.beta1 = in.get<double>("beta1");
  train.optimizer.beta2 = in.get<double>("beta2");
  train.optimizer.eps = in.get<double>("eps");
  train.optimizer.weight_decay = in.get<double>("weight decay");
  train.seed = in.get<std::uint64_t>("seed");

  Network<float> net(cfg, train.seed);
  auto params = net.parameters();
  const auto count = in.get<std::uint32_t>("parameter count");
  if (count != params.size()) {
    throw FormatError("checkpoint has " + std::to_string(count) + " parameters, architecture expects " +
                      std::to_string(params.size()));
  }
  for (auto* p : params) {
    const auto len = in.get<std::uint16_t>("name length");
    const auto name = in.get_string(len, "parameter name");
    const auto rows = in.get<std::uint32_t>("rows");
    const auto cols = in.get<std::uint32_t>("cols");
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw FormatError("checkpoint parameter '" + name + "' (" + std::to_string(rows) + "x" + std::to_string(cols) +
                        ") does not match expected '" + p->name + "'");
    }
    for (Index r = 0; r < p->value.rows(); ++r)
      for (Index c = 0; c < p->value.cols(); ++c) p->value(r, c) = in.get<float>("parameter data");
  }
  if (!in.done()) throw FormatError(path.string() + ": trailing bytes after parameters");
  return {std::move(net), train};
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> log) {
  std::FILE* out = std::fopen(path.string().c_str(), "wb");
  if (!out) throw DataError("cannot write " + path.string());
  std::fputs("epoch\ttrain_loss\tdev_metric\n", out);
  for (const auto& e : log) {
    std::fprintf(out, "%d\t%.9g\t", e.epoch, e.train_loss);
    if (e.dev_metric) {
      std::fprintf(out, "%.9g\n", *e.dev_metric);
    } else {
      std::fputs("NA\n", out);
    }
  }
  std::fclose(out);
}

}  // namespace wic::nn
