#include "wic/synthetic.hpp"

#include <cmath>

#include "wic/error.hpp"
#include "wic/features.hpp"
#include "wic/random.hpp"

namespace wic::synthetic {

namespace {

Eigen::VectorXd gaussian(Eigen::Index dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

// Pair of vectors with the requested cosine and random norms in [0.5, 2].
std::pair<Eigen::VectorXd, Eigen::VectorXd> pair_with_cosine(double cosine, Eigen::Index dim, Rng& rng) {
  const Eigen::VectorXd a = gaussian(dim, rng).normalized();
  Eigen::VectorXd u = gaussian(dim, rng);
  u -= u.dot(a) * a;
  u.normalize();
  const Eigen::VectorXd b = cosine * a + std::sqrt(std::max(0.0, 1.0 - cosine * cosine)) * u;
  return {a * rng.uniform(0.5, 2.0), b * rng.uniform(0.5, 2.0)};
}

const char* const kWords[] = {"river", "stone", "light", "paper", "green", "quick", "table", "cloud",
                              "north", "field", "glass", "music", "storm", "plain", "bright", "water"};

}  // namespace

int label_for_cosine(double cosine) {
  if (cosine < kLabelCuts[0]) return 1;
  if (cosine < kLabelCuts[1]) return 2;
  if (cosine < kLabelCuts[2]) return 3;
  return 4;
}

TaskData ogwic_pairs(std::size_t rows, Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  TaskData out;
  const auto n = static_cast<Eigen::Index>(rows);
  out.e1.resize(n, dim);
  out.e2.resize(n, dim);
  out.targets.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    auto [a, b] = pair_with_cosine(rng.uniform(-0.2, 1.0), dim, rng);
    out.e1.row(r) = a.cast<float>().transpose();
    out.e2.row(r) = b.cast<float>().transpose();
    // Label from the stored float vectors so it is exactly monotone in what models see.
    out.targets[r] = label_for_cosine(cosine(out.e1.row(r), out.e2.row(r)));
    out.ids.push_back("og" + std::to_string(r));
    out.languages.push_back("xx");
  }
  return out;
}

TaskData diswic_pairs(std::size_t rows, Eigen::Index dim, double noise, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::VectorXd direction = gaussian(dim, rng).normalized();
  TaskData out;
  const auto n = static_cast<Eigen::Index>(rows);
  out.e1.resize(n, dim);
  out.e2.resize(n, dim);
  Eigen::VectorXd clean(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::VectorXd a = gaussian(dim, rng);
    const Eigen::VectorXd b = a + rng.uniform(0.2, 3.0) * direction;
    out.e1.row(r) = a.cast<float>().transpose();
    out.e2.row(r) = b.cast<float>().transpose();
    clean[r] = 0.5 * euclidean(out.e1.row(r), out.e2.row(r)) + 0.25;
    out.ids.push_back("dw" + std::to_string(r));
    out.languages.push_back("xx");
  }
  const double sd = std::sqrt((clean.array() - clean.mean()).square().mean());
  out.targets.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) out.targets[r] = clean[r] + noise * sd * rng.normal();
  return out;
}

Corpus make_corpus(std::size_t instances, Eigen::Index dim, const std::vector<std::string>& languages,
                   std::uint64_t seed, const std::string& prefix) {
  if (languages.empty()) throw std::invalid_argument("synthetic corpus needs at least one language");
  Rng rng(seed);
  Corpus corpus;
  const std::size_t n_words = std::size(kWords);
  auto make_usage = [&](const std::string& id, const std::string& lemma, const std::string& language) {
    Usage u;
    u.usage_id = id;
    u.lemma = lemma;
    u.language = language;
    const auto before = 2 + rng.below(6);
    const auto after = 1 + rng.below(6);
    for (std::size_t w = 0; w < before; ++w) u.context += std::string(kWords[rng.below(n_words)]) + " ";
    u.target_start = u.context.size();
    u.context += lemma;
    u.target_end = u.context.size();
    for (std::size_t w = 0; w < after; ++w) u.context += " " + std::string(kWords[rng.below(n_words)]);
    return u;
  };

  for (std::size_t i = 0; i < instances; ++i) {
    const auto& language = languages[i % languages.size()];
    const std::string lemma = language + "_lemma" + std::to_string(rng.below(8));
    const std::string id = prefix + std::to_string(i);
    corpus.usages.push_back(make_usage(id + "_a", lemma, language));
    corpus.usages.push_back(make_usage(id + "_b", lemma, language));

    auto [a, b] = pair_with_cosine(rng.uniform(-0.2, 1.0), dim, rng);
    EmbeddingRecord rec{id, a.cast<float>(), b.cast<float>()};
    const int label = label_for_cosine(cosine(rec.e1, rec.e2));

    // Ratings with median `label`: two copies of it plus neighbours.
    Instance inst;
    inst.instance_id = id;
    inst.lemma = lemma;
    inst.language = language;
    inst.usage_1 = id + "_a";
    inst.usage_2 = id + "_b";
    const int lo = std::max(1, label - static_cast<int>(rng.below(3)));
    const int hi = std::min(4, label + static_cast<int>(rng.below(3)));
    inst.ratings = {label, lo, label, hi};
    if (rng.uniform() < 0.5) inst.ratings.pop_back();
    inst.targets = compute_targets(inst.ratings, inst.instance_id);
    corpus.instances.push_back(std::move(inst));
    corpus.embeddings.push_back(std::move(rec));
  }
  return corpus;
}

void write_corpus_tsv(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_usages_tsv(dir / "usages.tsv", corpus.usages);
  write_instances_tsv(dir / "instances.tsv", corpus.instances);
}

}  // namespace wic::synthetic
