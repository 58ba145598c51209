#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "wic/error.hpp"

namespace wic {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class FeatureKind { plain, enriched, adapted };

enum class Slice { adapted1, adapted2, e1, e2, diff, prod, cos, euclid, manhattan };

/// Column layout of a pair feature vector for embedding dimension d.
///   plain    [e1|e2]                               2d
///   enriched [e1|e2|e1-e2|e1*e2|C|E|M]             4d+3
///   adapted  [e1'|e2'|e1|e2|e1-e2|e1*e2|C|E|M]     6d+3
/// The scalar order C (cosine), E (Euclidean), M (Manhattan) is part of the
/// model format.
struct FeatureLayout {
  FeatureKind kind = FeatureKind::plain;
  Eigen::Index d = 0;

  static FeatureLayout plain(Eigen::Index d) { return {FeatureKind::plain, d}; }
  static FeatureLayout enriched(Eigen::Index d) { return {FeatureKind::enriched, d}; }
  static FeatureLayout adapted(Eigen::Index d) { return {FeatureKind::adapted, d}; }

  [[nodiscard]] Eigen::Index width() const {
    switch (kind) {
      case FeatureKind::plain: return 2 * d;
      case FeatureKind::enriched: return 4 * d + 3;
      case FeatureKind::adapted: return 6 * d + 3;
    }
    return 0;
  }

  [[nodiscard]] bool has(Slice s) const {
    if (s == Slice::adapted1 || s == Slice::adapted2) return kind == FeatureKind::adapted;
    if (s == Slice::e1 || s == Slice::e2) return true;
    return kind != FeatureKind::plain;
  }

  [[nodiscard]] Eigen::Index offset(Slice s) const {
    if (!has(s)) throw ShapeError("feature layout has no such slice");
    const Eigen::Index base = kind == FeatureKind::adapted ? 2 * d : 0;
    switch (s) {
      case Slice::adapted1: return 0;
      case Slice::adapted2: return d;
      case Slice::e1: return base;
      case Slice::e2: return base + d;
      case Slice::diff: return base + 2 * d;
      case Slice::prod: return base + 3 * d;
      case Slice::cos: return base + 4 * d;
      case Slice::euclid: return base + 4 * d + 1;
      case Slice::manhattan: return base + 4 * d + 2;
    }
    return 0;
  }

  [[nodiscard]] Eigen::Index length(Slice s) const {
    return (s == Slice::cos || s == Slice::euclid || s == Slice::manhattan) ? 1 : d;
  }
};

template <typename Scalar>
struct PairFeatures {
  FeatureLayout layout;
  Vector<Scalar> values;

  [[nodiscard]] auto slice(Slice s) const {
    return values.segment(layout.offset(s), layout.length(s));
  }
};

namespace detail {

template <typename A, typename B>
void check_same_length(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("embedding lengths differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

}  // namespace detail

/// Cosine similarity accumulated in double, clamped to [-1, 1].
/// Throws DataError for a zero vector.
template <typename A, typename B>
double cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::check_same_length(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a.derived().coeff(i));
    const double y = static_cast<double>(b.derived().coeff(i));
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

template <typename A, typename B>
double euclidean(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::check_same_length(a, b);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double diff =
        static_cast<double>(a.derived().coeff(i)) - static_cast<double>(b.derived().coeff(i));
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

template <typename A, typename B>
double manhattan(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::check_same_length(a, b);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    sum += std::abs(static_cast<double>(a.derived().coeff(i)) -
                    static_cast<double>(b.derived().coeff(i)));
  }
  return sum;
}

/// Writes the comparison block [e1|e2|e1-e2|e1*e2|C|E|M] (4d+3 values) into `out`.
template <typename A, typename B, typename Out>
void write_comparisons(const Eigen::MatrixBase<A>& e1, const Eigen::MatrixBase<B>& e2,
                       Eigen::MatrixBase<Out> const& out_const) {
  using Scalar = typename Out::Scalar;
  detail::check_same_length(e1, e2);
  auto& out = const_cast<Eigen::MatrixBase<Out>&>(out_const);
  const Eigen::Index d = e1.size();
  if (out.size() != 4 * d + 3) throw ShapeError("comparison block has wrong length");
  for (Eigen::Index i = 0; i < d; ++i) {
    const Scalar x = static_cast<Scalar>(e1.derived().coeff(i));
    const Scalar y = static_cast<Scalar>(e2.derived().coeff(i));
    out.coeffRef(i) = x;
    out.coeffRef(d + i) = y;
    out.coeffRef(2 * d + i) = x - y;
    out.coeffRef(3 * d + i) = x * y;
  }
  out.coeffRef(4 * d) = static_cast<Scalar>(cosine(e1, e2));
  out.coeffRef(4 * d + 1) = static_cast<Scalar>(euclidean(e1, e2));
  out.coeffRef(4 * d + 2) = static_cast<Scalar>(manhattan(e1, e2));
}

template <typename Scalar = double, typename A, typename B>
PairFeatures<Scalar> concat_features(const Eigen::MatrixBase<A>& e1,
                                     const Eigen::MatrixBase<B>& e2) {
  detail::check_same_length(e1, e2);
  PairFeatures<Scalar> f{FeatureLayout::plain(e1.size()), Vector<Scalar>(2 * e1.size())};
  f.values.head(e1.size()) = e1.template cast<Scalar>();
  f.values.tail(e2.size()) = e2.template cast<Scalar>();
  return f;
}

template <typename Scalar = double, typename A, typename B>
PairFeatures<Scalar> enrich_features(const Eigen::MatrixBase<A>& e1,
                                     const Eigen::MatrixBase<B>& e2) {
  detail::check_same_length(e1, e2);
  PairFeatures<Scalar> f{FeatureLayout::enriched(e1.size()),
                         Vector<Scalar>(4 * e1.size() + 3)};
  write_comparisons(e1, e2, f.values);
  return f;
}

/// Row-wise plain features for row-aligned embedding matrices.
template <typename Scalar = double, typename A, typename B>
Matrix<Scalar> concat_rows(const Eigen::MatrixBase<A>& e1, const Eigen::MatrixBase<B>& e2) {
  if (e1.rows() != e2.rows() || e1.cols() != e2.cols()) throw ShapeError("e1/e2 shape mismatch");
  Matrix<Scalar> out(e1.rows(), 2 * e1.cols());
  out.leftCols(e1.cols()) = e1.template cast<Scalar>();
  out.rightCols(e2.cols()) = e2.template cast<Scalar>();
  return out;
}

/// Row-wise enriched features (4d+3 columns).
template <typename Scalar = double, typename A, typename B>
Matrix<Scalar> enrich_rows(const Eigen::MatrixBase<A>& e1, const Eigen::MatrixBase<B>& e2) {
  if (e1.rows() != e2.rows() || e1.cols() != e2.cols()) throw ShapeError("e1/e2 shape mismatch");
  Matrix<Scalar> out(e1.rows(), 4 * e1.cols() + 3);
  Vector<Scalar> row(out.cols());
  for (Eigen::Index r = 0; r < e1.rows(); ++r) {
    write_comparisons(e1.row(r).transpose(), e2.row(r).transpose(), row);
    out.row(r) = row.transpose();
  }
  return out;
}

/// Cosine similarity per row.
template <typename A, typename B>
Eigen::VectorXd cosine_rows(const Eigen::MatrixBase<A>& e1, const Eigen::MatrixBase<B>& e2) {
  if (e1.rows() != e2.rows() || e1.cols() != e2.cols()) throw ShapeError("e1/e2 shape mismatch");
  Eigen::VectorXd out(e1.rows());
  for (Eigen::Index r = 0; r < e1.rows(); ++r) out[r] = cosine(e1.row(r), e2.row(r));
  return out;
}

}  // namespace wic
