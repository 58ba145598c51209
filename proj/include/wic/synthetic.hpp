#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wic/data_model.hpp"
#include "wic/embedding_store.hpp"

namespace wic::synthetic {

/// Cosine cut points of the synthetic OGWiC corpus: label 1 below the first,
/// label 4 above the last.
inline constexpr double kLabelCuts[3] = {0.15, 0.45, 0.75};

int label_for_cosine(double cosine);

/// Embedding pairs whose gold median label is a noiseless monotone function
/// of cos(e1, e2): cosines uniform in [-0.2, 1), label by kLabelCuts.
TaskData ogwic_pairs(std::size_t rows, Eigen::Index dim, std::uint64_t seed);

/// Embedding pairs with e2 = e1 + delta * v for one fixed unit direction v,
/// delta uniform in [0.2, 3]; target = 0.5 * ||e1 - e2|| + 0.25 plus Gaussian
/// noise with standard deviation `noise` times the noiseless target's.
TaskData diswic_pairs(std::size_t rows, Eigen::Index dim, double noise, std::uint64_t seed);

struct Corpus {
  std::vector<Usage> usages;
  std::vector<Instance> instances;
  std::vector<EmbeddingRecord> embeddings;
};

/// File-ready corpus: usages with generated contexts, instances whose three
/// or four ratings put the median on the cosine-derived label, and matching
/// embeddings. Ids are prefixed with `prefix`.
Corpus make_corpus(std::size_t instances, Eigen::Index dim, const std::vector<std::string>& languages,
                   std::uint64_t seed, const std::string& prefix = "i");

/// Writes usages.tsv and instances.tsv into `dir`.
void write_corpus_tsv(const Corpus& corpus, const std::filesystem::path& dir);

}  // namespace wic::synthetic
