// Writes a synthetic corpus (train/dev/test splits plus one embedding store)
// whose labels follow the cosine of the paired vectors.
#include <iostream>

#include "CLI11.hpp"

#include "wic/embedding_store.hpp"
#include "wic/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic WiC corpus generator"};
  std::filesystem::path out;
  std::size_t n = 600;
  Eigen::Index dim = 32;
  std::uint64_t seed = 1;
  std::vector<std::string> languages{"de", "en"};
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--instances", n, "training instances (dev and test get a quarter each)");
  app.add_option("--dim", dim, "embedding dimension");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--languages", languages, "language codes");
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<wic::EmbeddingRecord> records;
    const std::pair<const char*, std::size_t> splits[] = {{"train", n}, {"dev", n / 4}, {"test", n / 4}};
    std::uint64_t stream = 0;
    for (const auto& [name, count] : splits) {
      auto corpus = wic::synthetic::make_corpus(count, dim, languages, seed + 1000 * stream++, std::string(name) + "-");
      std::filesystem::create_directories(out / name);
      wic::synthetic::write_corpus_tsv(corpus, out / name);
      for (auto& r : corpus.embeddings) records.push_back(std::move(r));
    }
    wic::write_store(records, out / "embeddings.wice");
    std::cout << "wrote " << records.size() << " embedding records to " << (out / "embeddings.wice").string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
