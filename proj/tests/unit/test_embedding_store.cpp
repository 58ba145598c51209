#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "wic/embedding_store.hpp"
#include "wic/error.hpp"
#include "wic/random.hpp"

using namespace wic;
namespace fs = std::filesystem;

namespace {

EmbeddingRecord record(const std::string& id, int d, Rng& rng) {
  EmbeddingRecord r{id, Eigen::VectorXf(d), Eigen::VectorXf(d)};
  for (int i = 0; i < d; ++i) {
    r.e1[i] = static_cast<float>(rng.normal());
    r.e2[i] = static_cast<float>(rng.normal());
  }
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<char>& bytes, std::size_t n) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(n));
}

const char* kUsages =
    "usage_id\tlemma\tlanguage\ttarget_start\ttarget_end\tcontext\n"
    "u1\tx\ten\t0\t1\tx a\n"
    "u2\tx\ten\t0\t1\tx b\n";

}  // namespace

TEST_CASE("single record round trip is bit exact") {
  TempDir dir("wic_store_rt");
  Rng rng(5);
  std::vector<EmbeddingRecord> in{record("only", 4, rng)};
  in[0].e1[2] = -0.0f;
  in[0].e2[3] = std::numeric_limits<float>::denorm_min();
  write_store(in, dir.path / "s.wice");
  const auto store = read_store(dir.path / "s.wice");
  REQUIRE(store.size() == 1);
  CHECK(store.dimension() == 4);
  const auto* r = store.find("only");
  REQUIRE(r != nullptr);
  CHECK(std::memcmp(r->e1.data(), in[0].e1.data(), 16) == 0);
  CHECK(std::memcmp(r->e2.data(), in[0].e2.data(), 16) == 0);
  CHECK(store.find("other") == nullptr);
}

TEST_CASE("many records keep order and bytes") {
  TempDir dir("wic_store_many");
  Rng rng(6);
  std::vector<EmbeddingRecord> in;
  for (int i = 0; i < 50; ++i) in.push_back(record("id-" + std::to_string(i) + "-ü", 7, rng));
  write_store(in, dir.path / "a.wice");
  const auto store = read_store(dir.path / "a.wice");
  write_store(store.records(), dir.path / "b.wice");
  CHECK(slurp(dir.path / "a.wice") == slurp(dir.path / "b.wice"));
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(store.records()[i].instance_id == in[i].instance_id);
}

TEST_CASE("write rejects inconsistent input") {
  TempDir dir("wic_store_bad");
  Rng rng(7);
  CHECK_THROWS_AS(write_store(std::vector<EmbeddingRecord>{record("a", 4, rng), record("b", 5, rng)}, dir.path / "x"),
                  DataError);
  auto nan = record("n", 3, rng);
  nan.e2[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(write_store(std::vector<EmbeddingRecord>{nan}, dir.path / "x"), DataError);
  CHECK_THROWS_AS(write_store(std::vector<EmbeddingRecord>{}, dir.path / "x"), DataError);
  CHECK_THROWS_AS(EmbeddingStore(3, {record("a", 3, rng), record("a", 3, rng)}), DataError);
}

TEST_CASE("file size follows the layout arithmetic") {
  // 10 ids of 2 bytes, 90 of 3, 900 of 4, 9000 of 5: 48890 id bytes;
  // per record 2 + 8 * 768 = 6146 fixed bytes.
  constexpr std::size_t kExpected = 18 + 10000 * 6146 + 48890;
  static_assert(kExpected == 61508908);
  CHECK(kStoreHeaderBytes == 18);

  TempDir dir("wic_store_size");
  std::vector<EmbeddingRecord> in;
  in.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    in.push_back({"i" + std::to_string(i), Eigen::VectorXf::Constant(768, 0.5f), Eigen::VectorXf::Constant(768, 1.f)});
  }
  CHECK(store_file_size(in, 768) == kExpected);
  write_store(in, dir.path / "big.wice");
  CHECK(fs::file_size(dir.path / "big.wice") == kExpected);
}

TEST_CASE("corrupt files are rejected") {
  TempDir dir("wic_store_corrupt");
  Rng rng(8);
  // sizes: 18 header + (2 + 1 + 32) + (2 + 2 + 32) = 89 bytes
  write_store(std::vector<EmbeddingRecord>{record("a", 4, rng), record("bb", 4, rng)}, dir.path / "ok.wice");
  const auto bytes = slurp(dir.path / "ok.wice");
  REQUIRE(bytes.size() == 89);

  SUBCASE("bad magic") {
    auto copy = bytes;
    copy[0] = 'X';
    spit(dir.path / "m.wice", copy, copy.size());
    CHECK_THROWS_WITH_AS(read_store(dir.path / "m.wice"), doctest::Contains("magic"), FormatError);
  }
  SUBCASE("bad version") {
    auto copy = bytes;
    copy[4] = 9;
    spit(dir.path / "v.wice", copy, copy.size());
    CHECK_THROWS_WITH_AS(read_store(dir.path / "v.wice"), doctest::Contains("version"), FormatError);
  }
  SUBCASE("last record cut one byte short") {
    // second record: id length at 53, id at 55, e1 at 57, e2 at 73
    spit(dir.path / "t.wice", bytes, 88);
    CHECK_THROWS_WITH_AS(read_store(dir.path / "t.wice"), doctest::Contains("byte offset 73"), FormatError);
  }
  SUBCASE("count larger than the payload") {
    spit(dir.path / "c.wice", bytes, 60);
    CHECK_THROWS_WITH_AS(read_store(dir.path / "c.wice"), doctest::Contains("header claims 2"), FormatError);
  }
  SUBCASE("header cut") {
    spit(dir.path / "h.wice", bytes, 10);
    CHECK_THROWS_AS(read_store(dir.path / "h.wice"), FormatError);
  }
  SUBCASE("trailing bytes") {
    auto copy = bytes;
    copy.push_back(0);
    spit(dir.path / "x.wice", copy, copy.size());
    CHECK_THROWS_WITH_AS(read_store(dir.path / "x.wice"), doctest::Contains("trailing"), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_store(dir.path / "nope.wice"), DataError);
  }
}

TEST_CASE("join follows dataset order") {
  const std::string instances =
      "instance_id\tlemma\tlanguage\tusage_1\tusage_2\tratings\n"
      "p1\tx\ten\tu1\tu2\t1,1\n"
      "p2\tx\ten\tu2\tu1\t2,3\n"
      "p3\tx\ten\tu1\tu2\t4,4,3\n";
  const auto ds = parse_dataset(kUsages, instances);
  Rng rng(9);
  std::vector<EmbeddingRecord> recs{record("p3", 3, rng), record("p1", 3, rng), record("p2", 3, rng),
                                    record("extra", 3, rng)};
  const EmbeddingStore store(3, recs);

  const auto d = join(ds, Task::diswic, store);
  REQUIRE(d.rows() == 3);
  CHECK(d.ids == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(d.e1.row(0).transpose() == recs[1].e1);
  CHECK(d.e2.row(2).transpose() == recs[0].e2);
  CHECK(d.targets[1] == 1.0);

  const auto o = join(ds, Task::ogwic, store);
  CHECK(o.ids == std::vector<std::string>{"p1", "p3"});
  CHECK(o.targets[1] == 4.0);

  const std::vector<Eigen::Index> rows{2, 0};
  const auto s = d.subset(rows);
  CHECK(s.ids == std::vector<std::string>{"p3", "p1"});
  CHECK(s.e1.row(1) == d.e1.row(0));

  const EmbeddingStore partial(3, {recs[0], recs[1]});
  CHECK_THROWS_WITH_AS(join(ds, Task::diswic, partial), doctest::Contains("p2"), DataError);
}

TEST_CASE("missing id list is capped at ten") {
  std::string instances = "instance_id\tlemma\tlanguage\tusage_1\tusage_2\tratings\n";
  for (int i = 0; i < 15; ++i) instances += "m" + std::to_string(i) + "\tx\ten\tu1\tu2\t2,2\n";
  const auto ds = parse_dataset(kUsages, instances);
  Rng rng(10);
  const EmbeddingStore store(2, {record("unrelated", 2, rng)});
  try {
    (void)join(ds, Task::ogwic, store);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("m9") != std::string::npos);
    CHECK(msg.find("m10") == std::string::npos);
    CHECK(msg.find("15") != std::string::npos);
  }
}

TEST_CASE("tsv export") {
  TempDir dir("wic_store_tsv");
  const EmbeddingStore store(2, {{"a", Eigen::Vector2f(0.5f, -1.f), Eigen::Vector2f(2.f, 0.125f)}});
  export_store_tsv(store, dir.path / "s.tsv");
  std::ifstream in(dir.path / "s.tsv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "a\t0.5\t-1\t2\t0.125");
}
