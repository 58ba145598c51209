#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <numeric>

#include "oracles/oracles.hpp"
#include "wic/data_model.hpp"
#include "wic/error.hpp"

using namespace wic;

namespace {

std::optional<int> med(std::vector<int> r) { return median_label(r); }
double dis(std::vector<int> r) { return mean_pairwise_disagreement(r); }

const char* kUsageHeader = "usage_id\tlemma\tlanguage\ttarget_start\ttarget_end\tcontext\n";
const char* kInstanceHeader = "instance_id\tlemma\tlanguage\tusage_1\tusage_2\tratings\n";

std::string usages3() {
  return std::string(kUsageHeader) +
         "u1\tbank\ten\t4\t8\tthe bank was closed\n"
         "u2\tbank\ten\t0\t4\tbank of the river\n"
         "u3\tbank\ten\t2\t6\ta bank loan\n";
}

}  // namespace

TEST_CASE("median label") {
  CHECK(med({2, 2, 3}) == 2);
  CHECK_FALSE(med({2, 3}).has_value());
  CHECK_FALSE(med({1, 1, 4, 4}).has_value());
  CHECK(med({3, 3, 3, 3}) == 3);
  CHECK(med({1, 3}) == 2);
  CHECK(med({4}) == 4);
  CHECK_THROWS_AS(med({1, 5}), DataError);
  CHECK_THROWS_WITH_AS(median_label(std::vector<int>{0, 2}, "inst7"), doctest::Contains("inst7"), DataError);
}

TEST_CASE("mean pairwise disagreement") {
  CHECK(dis({4, 4, 4}) == 0.0);
  CHECK(dis({1, 4}) == 3.0);
  CHECK(dis({1, 2, 4}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(dis({3}), DataError);
  CHECK_THROWS_AS(dis({2, 7}), DataError);
}

TEST_CASE("targets match naive oracles for every rating list up to length 6") {
  std::size_t checked = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<int> r(static_cast<std::size_t>(n), 1);
    while (true) {
      const auto t = compute_targets(r);
      CHECK(t.median_label == oracle::naive_median(r));
      if (n >= 2) {
        REQUIRE(t.mean_disagreement.has_value());
        const double want = oracle::naive_disagreement(r);
        CHECK(*t.mean_disagreement == doctest::Approx(want).epsilon(1e-14));
        CHECK(*t.mean_disagreement >= 0.0);
        CHECK(*t.mean_disagreement <= 3.0);
        const bool all_equal = std::all_of(r.begin(), r.end(), [&](int v) { return v == r[0]; });
        CHECK((*t.mean_disagreement == 0.0) == all_equal);
      } else {
        CHECK_FALSE(t.mean_disagreement.has_value());
      }
      if (t.median_label) {
        CHECK(*t.median_label >= *std::min_element(r.begin(), r.end()));
        CHECK(*t.median_label <= *std::max_element(r.begin(), r.end()));
      }
      ++checked;
      std::size_t i = 0;
      while (i < r.size() && r[i] == 4) r[i++] = 1;
      if (i == r.size()) break;
      ++r[i];
    }
  }
  CHECK(checked == 4 + 16 + 64 + 256 + 1024 + 4096);
}

TEST_CASE("disagreement is permutation invariant") {
  std::vector<int> r{4, 1, 3, 3, 2, 1};
  const double base = dis(r);
  std::sort(r.begin(), r.end());
  do {
    CHECK(dis(r) == base);
  } while (std::next_permutation(r.begin(), r.end()));
}

TEST_CASE("task string round trip") {
  CHECK(parse_task("ogwic") == Task::ogwic);
  CHECK(parse_task(to_string(Task::diswic)) == Task::diswic);
  CHECK_THROWS_AS(parse_task("wic"), ConfigError);
}

TEST_CASE("parse dataset") {
  SUBCASE("empty instance file") {
    const auto ds = parse_dataset(usages3(), "");
    CHECK(ds.instances.empty());
    CHECK(ds.usages.size() == 3);
  }
  SUBCASE("one instance rated 2,3 is DisWiC only") {
    const auto ds = parse_dataset(usages3(), std::string(kInstanceHeader) + "p1\tbank\ten\tu1\tu2\t2,3\n");
    CHECK(ds.count(Task::diswic) == 1);
    CHECK(ds.count(Task::ogwic) == 0);
    CHECK(ds.discarded_ogwic == 1);
    CHECK(ds.instances[0].target(Task::diswic) == 1.0);
    CHECK_THROWS_AS((void)ds.instances[0].target(Task::ogwic), DataError);
  }
  SUBCASE("single rating is excluded from DisWiC") {
    const auto ds = parse_dataset(usages3(), std::string(kInstanceHeader) + "p1\tbank\ten\tu1\tu2\t3\n");
    CHECK(ds.count(Task::ogwic) == 1);
    CHECK(ds.count(Task::diswic) == 0);
    CHECK(ds.discarded_diswic == 1);
  }
  SUBCASE("duplicate instance id") {
    CHECK_THROWS_WITH_AS(parse_dataset(usages3(), std::string(kInstanceHeader) +
                                                      "p1\tbank\ten\tu1\tu2\t2,2\n"
                                                      "p1\tbank\ten\tu1\tu3\t2,2\n"),
                         doctest::Contains("duplicate"), DataError);
  }
  SUBCASE("dangling usage names the instance") {
    CHECK_THROWS_WITH_AS(parse_dataset(usages3(), std::string(kInstanceHeader) + "p9\tbank\ten\tu1\tu7\t2,2\n"),
                         doctest::Contains("p9"), DataError);
  }
  SUBCASE("malformed row reports its line") {
    CHECK_THROWS_WITH_AS(parse_dataset(usages3(), std::string(kInstanceHeader) +
                                                      "p1\tbank\ten\tu1\tu2\t2,2\n"
                                                      "p2\tbank\ten\tu1\n"),
                         doctest::Contains(":3"), DataError);
  }
  SUBCASE("rating outside 1..4") {
    CHECK_THROWS_WITH_AS(parse_dataset(usages3(), std::string(kInstanceHeader) + "p5\tbank\ten\tu1\tu2\t2,5\n"),
                         doctest::Contains("p5"), DataError);
  }
  SUBCASE("lemma mismatch") {
    CHECK_THROWS_AS(parse_dataset(usages3(), std::string(kInstanceHeader) + "p1\tbench\ten\tu1\tu2\t2,2\n"),
                    DataError);
  }
  SUBCASE("target span beyond the context") {
    CHECK_THROWS_AS(parse_dataset(std::string(kUsageHeader) + "u1\tbank\ten\t4\t40\tthe bank\n", ""), DataError);
    CHECK_THROWS_AS(parse_dataset(std::string(kUsageHeader) + "u1\tbank\ten\t4\t4\tthe bank\n", ""), DataError);
  }
  SUBCASE("spans count code points") {
    const auto ds = parse_dataset(std::string(kUsageHeader) + "u1\tbär\tde\t4\t7\tder bär schläft\n", "");
    CHECK(ds.usages[0].target_end == 7);
    CHECK(utf8_length("bär") == 3);
  }
  SUBCASE("bad header") {
    CHECK_THROWS_AS(parse_dataset("id\tlemma\n", ""), DataError);
  }
}

TEST_CASE("escaped fields round trip") {
  const std::string raw = "tab\there\nnew line\\slash\r";
  const auto escaped = escape_field(raw);
  CHECK(escaped.find('\t') == std::string::npos);
  CHECK(escaped.find('\n') == std::string::npos);
  CHECK(unescape_field(escaped) == raw);
}

TEST_CASE("tsv writers round trip through the loader") {
  const auto ds = parse_dataset(usages3(), std::string(kInstanceHeader) + "p1\tbank\ten\tu1\tu2\t1,2,2\n"
                                                                           "p2\tbank\ten\tu2\tu3\t4,4\n");
  const auto dir = std::filesystem::temp_directory_path() / "wic_test_data_model";
  std::filesystem::create_directories(dir);
  write_usages_tsv(dir / "u.tsv", ds.usages);
  write_instances_tsv(dir / "i.tsv", ds.instances);
  const auto back = load_dataset(dir / "u.tsv", dir / "i.tsv");
  REQUIRE(back.instances.size() == 2);
  CHECK(back.instances[0].ratings == std::vector<int>{1, 2, 2});
  CHECK(back.usages[1].context == "bank of the river");
  CHECK(load_instances(dir / "i.tsv").size() == 2);
  CHECK_THROWS_AS(load_dataset(dir / "missing.tsv", dir / "i.tsv"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset statistics") {
  CHECK(word_count("a b c") == 3);
  CHECK(word_count("  a\tb  ") == 2);

  SUBCASE("two instances over three usages") {
    const auto ds = parse_dataset(usages3(), std::string(kInstanceHeader) + "p1\tbank\ten\tu1\tu2\t2,2\n"
                                                                             "p2\tbank\ten\tu2\tu3\t1,2\n");
    const auto t = dataset_stats(ds);
    REQUIRE(t.per_language.size() == 1);
    const auto& en = t.per_language.at("en");
    CHECK(en.unique_contexts == 3);
    CHECK(en.unique_lemmas == 1);
    CHECK(en.context_length == 4);  // (4 + 4 + 3) / 3 rounds to 4
    CHECK(en.ogwic_instances == 1);
    CHECK(en.diswic_instances == 2);
  }

  SUBCASE("hand-counted two-language fixture") {
    const std::string usages = std::string(kUsageHeader) +
                               "a1\tHaus\tde\t4\t8\tdas Haus\n"
                               "a2\tHaus\tde\t0\t4\tHaus am See steht leer\n"
                               "a3\tBaum\tde\t4\t8\tder Baum\n"
                               "a4\tBaum\tde\t0\t4\tBaum\n"
                               "b1\tcat\ten\t4\t7\tthe cat sat\n"
                               "b2\tcat\ten\t2\t5\ta cat\n";
    const std::string instances = std::string(kInstanceHeader) +
                                  "d1\tHaus\tde\ta1\ta2\t3,4\n"
                                  "d2\tBaum\tde\ta3\ta4\t4,4,4\n"
                                  "d3\tHaus\tde\ta2\ta1\t1,3\n"
                                  "e1\tcat\ten\tb1\tb2\t2,2,3\n";
    const auto t = dataset_stats(parse_dataset(usages, instances));
    const auto& de = t.per_language.at("de");
    const auto& en = t.per_language.at("en");
    CHECK(de.unique_contexts == 4);
    CHECK(de.unique_lemmas == 2);
    CHECK(de.context_length == 3);  // (2 + 5 + 2 + 1) / 4 = 2.5 -> 3
    CHECK(de.ogwic_instances == 2);
    CHECK(de.diswic_instances == 3);
    CHECK(en.unique_contexts == 2);
    CHECK(en.unique_lemmas == 1);
    CHECK(en.context_length == 3);  // (3 + 2) / 2 = 2.5 -> 3
    CHECK(en.ogwic_instances == 1);
    CHECK(en.diswic_instances == 1);
    CHECK(t.average.unique_contexts == 3);
    CHECK(t.average.ogwic_instances == 2);  // (2 + 1) / 2 = 1.5 -> 2
    CHECK(t.average.diswic_instances == 2);
  }

  SUBCASE("empty corpus") {
    const auto t = dataset_stats(parse_dataset("", ""));
    CHECK(t.per_language.empty());
  }
}
