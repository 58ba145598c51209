#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles/oracles.hpp"
#include "wic/baselines.hpp"
#include "wic/error.hpp"
#include "wic/random.hpp"

using namespace wic;

namespace {

struct Labeled {
  std::vector<double> sims;
  std::vector<int> gold;
};

// Similarities in [-0.2, 1) labelled by fixed cuts, a fraction relabelled at random.
Labeled noisy_points(std::size_t n, double noise, Rng& rng) {
  Labeled out;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.uniform(-0.2, 1.0);
    int label = oracle::bin_label(s, 0.15, 0.45, 0.75);
    if (rng.uniform() < noise) label = 1 + static_cast<int>(rng.below(4));
    out.sims.push_back(s);
    out.gold.push_back(label);
  }
  return out;
}

}  // namespace

TEST_CASE("apply bins") {
  const BinThresholds t{0.1, 0.4, 0.7};
  CHECK(apply_bins(0.1, t) == 1);
  CHECK(apply_bins(0.4, t) == 2);
  CHECK(apply_bins(0.7, t) == 3);
  CHECK(apply_bins(0.71, t) == 4);
  CHECK(apply_bins(-5.0, t) == 1);
  CHECK_THROWS_AS(apply_bins(std::nan(""), t), DataError);
  std::vector<double> sweep;
  for (int i = 0; i <= 1000; ++i) sweep.push_back(-0.5 + i * 0.0015);
  const auto labels = apply_bins(sweep, t);
  CHECK(std::is_sorted(labels.begin(), labels.end()));
  CHECK(labels.front() == 1);
  CHECK(labels.back() == 4);
}

TEST_CASE("candidate grid") {
  const std::vector<double> s{0.3, 0.1, 0.3, 0.2};
  const auto grid = bin_candidates(s);
  CHECK(grid == oracle::midpoint_grid(s));
  CHECK(grid.size() == 6);
  const std::vector<double> same{0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bin_candidates(same), DataError);

  std::vector<double> many;
  for (int i = 0; i < 5000; ++i) many.push_back(i * 1e-3);
  const auto thinned = bin_candidates(many);
  CHECK(thinned.size() <= kMaxBinCandidates + 4);
  CHECK(std::is_sorted(thinned.begin(), thinned.end()));
}

TEST_CASE("separable clusters reach alpha one") {
  std::vector<double> sims;
  std::vector<int> gold;
  const double centers[] = {-0.1, 0.3, 0.6, 0.9};
  for (int label = 1; label <= 4; ++label)
    for (int k = 0; k < 5; ++k) {
      sims.push_back(centers[label - 1] + 0.01 * k);
      gold.push_back(label);
    }
  const auto fit = optimize_bins(sims, gold);
  CHECK(fit.alpha == 1.0);
  CHECK(apply_bins(sims, fit.thresholds) == gold);
}

TEST_CASE("bin search input errors") {
  const std::vector<double> eq(10, 0.4);
  const std::vector<int> g{1, 2, 3, 4, 1, 2, 3, 4, 1, 2};
  CHECK_THROWS_AS(optimize_bins(eq, g), DataError);
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const std::vector<int> one{2, 2, 2, 2};
  CHECK_THROWS_AS(optimize_bins(s, one), DataError);
  const std::vector<int> three{1, 2, 3};
  CHECK_THROWS_AS(optimize_bins(s, three), ShapeError);
}

TEST_CASE("forty noisy points: exhaustive oracle agrees") {
  Rng rng(40);
  const auto data = noisy_points(40, 0.1, rng);
  const auto fit = optimize_bins(data.sims, data.gold);
  const auto best = oracle::exhaustive_bins(data.sims, data.gold, oracle::midpoint_grid(data.sims));
  CHECK(fit.alpha == best.alpha);
  CHECK(fit.thresholds.t1 == best.t1);
  CHECK(fit.thresholds.t2 == best.t2);
  CHECK(fit.thresholds.t3 == best.t3);

  const BinThresholds hand[] = {{0.15, 0.45, 0.75}, {0.0, 0.5, 0.8}, {0.2, 0.4, 0.6}};
  for (const auto& t : hand) {
    CHECK(fit.alpha >= krippendorff_alpha_ordinal(data.gold, apply_bins(data.sims, t)));
  }
}

TEST_CASE("bin search equals the exhaustive oracle up to 200 points") {
  Rng rng(200);
  for (std::size_t n : {8, 25, 60, 120, 200}) {
    const auto data = noisy_points(n, 0.3, rng);
    const auto fit = optimize_bins(data.sims, data.gold);
    const auto best = oracle::exhaustive_bins(data.sims, data.gold, oracle::midpoint_grid(data.sims));
    INFO("n = " << n);
    CHECK(fit.alpha == best.alpha);
    CHECK(fit.thresholds.t1 == best.t1);
    CHECK(fit.thresholds.t2 == best.t2);
    CHECK(fit.thresholds.t3 == best.t3);
    CHECK(krippendorff_alpha_ordinal(data.gold, apply_bins(data.sims, fit.thresholds)) == fit.alpha);
  }
}

TEST_CASE("linear regression exact recovery") {
  Rng rng(11);
  Eigen::MatrixXd X(30, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  const Eigen::Vector4d w(1.5, -2, 0.25, 3);
  const Eigen::VectorXd y = (X * w).array() + 0.7;
  const auto m = fit_linreg(X, y, 0.0);
  CHECK((predict_linreg(m, X) - y).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(m.bias == doctest::Approx(0.7).epsilon(1e-9));

  // nested noiseless datasets: held-out error stays at round-off once determined
  Eigen::MatrixXd H(10, 4);
  for (Eigen::Index i = 0; i < H.size(); ++i) H.data()[i] = rng.normal();
  const Eigen::VectorXd yh = (H * w).array() + 0.7;
  for (Eigen::Index k = 6; k <= 30; k += 4) {
    const auto mk = fit_linreg(X.topRows(k), y.head(k), 0.0);
    CHECK((predict_linreg(mk, H) - yh).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("linear regression degenerate inputs") {
  Eigen::MatrixXd X(6, 2);
  X << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;  // collinear columns
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(6, 4.25);
  const auto m = fit_linreg(X, c);
  CHECK(m.weights.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(m.bias == doctest::Approx(4.25).epsilon(1e-12));
  const Eigen::VectorXd y = X.col(0);
  CHECK_THROWS_WITH_AS(fit_linreg(X, y, 0.0), doctest::Contains("lambda"), DataError);

  const LinearModel zero{Eigen::VectorXd::Zero(2), -1.5};
  CHECK(predict_linreg(zero, X) == Eigen::VectorXd::Constant(6, -1.5));
  const LinearModel identity{Eigen::VectorXd::Ones(1), 0.0};
  CHECK(predict_linreg(identity, X.leftCols(1)) == X.col(0));
  CHECK_THROWS_AS(predict_linreg(identity, X), ShapeError);
}

TEST_CASE("ridge solution matches gradient descent") {
  Rng rng(50);
  Eigen::MatrixXd X(50, 10);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) y[i] = rng.normal() + X(i, 0) - 0.5 * X(i, 3);
  const double lambda = 1e-6;
  const auto m = fit_linreg(X, y, lambda);

  // minimize ||Xw + b - y||^2 + lambda ||w||^2 with fixed-step gradient descent
  Eigen::VectorXd w = Eigen::VectorXd::Zero(10);
  double b = 0;
  const double step = 1.0 / (2.0 * (X.squaredNorm() + 50.0 + lambda));
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd r = X * w + Eigen::VectorXd::Constant(50, b) - y;
    w -= step * (2.0 * X.transpose() * r + 2.0 * lambda * w);
    b -= step * 2.0 * r.sum();
  }
  const Eigen::VectorXd gd = X * w + Eigen::VectorXd::Constant(50, b);
  CHECK((predict_linreg(m, X) - gd).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("json artifacts round trip") {
  const BinFit fit{{0.1, 0.25, 0.5}, 0.75};
  const auto back = bin_fit_from_json(to_json(fit));
  CHECK(back.thresholds.t1 == 0.1);
  CHECK(back.thresholds.t3 == 0.5);
  CHECK(back.alpha == 0.75);
  CHECK_THROWS_AS(bin_fit_from_json(R"({"t1": 0.5, "t2": 0.2, "t3": 0.9, "alpha": 0})"), DataError);
  CHECK_THROWS_AS(bin_fit_from_json("{"), FormatError);

  Rng rng(3);
  Eigen::MatrixXd X(12, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  const Eigen::VectorXd y = X * Eigen::Vector3d(0.1, 1e-17, -7.25) + Eigen::VectorXd::Constant(12, 1.0 / 3.0);
  const auto m = fit_linreg(X, y);
  const auto mb = linear_model_from_json(to_json(m));
  CHECK(mb.weights == m.weights);
  CHECK(mb.bias == m.bias);
  CHECK(predict_linreg(mb, X) == predict_linreg(m, X));
}
