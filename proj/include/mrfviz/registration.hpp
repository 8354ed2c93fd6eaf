#ifndef MRFVIZ_REGISTRATION_HPP
#define MRFVIZ_REGISTRATION_HPP

// Similarity alignment (scale, rotation, translation) of point sets with known
// correspondences, solved in closed form.

#include "errors.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <json.hpp>

#include <cmath>
#include <string>

namespace mrfviz {

/// Points are stored one per row (n x dim).
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::MatrixXd rotation; ///< dim x dim, proper
  Eigen::VectorXd translation;

  int dim() const { return static_cast<int>(translation.size()); }

  static SimilarityTransform identity(int dim) {
    return {1.0, Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
  }

  /// Throws DomainError unless the fields satisfy the transform invariants.
  void validate(double tol = 1e-9) const {
    const auto d = translation.size();
    if (d != 2 && d != 3) throw DomainError("similarity transform must be 2D or 3D");
    if (rotation.rows() != d || rotation.cols() != d) throw DomainError("rotation shape does not match translation");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("similarity scale must be positive");
    if (std::abs(rotation.determinant() - 1.0) > tol) throw DomainError("rotation determinant is not +1");
    if (((rotation.transpose() * rotation) - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
      throw DomainError("rotation is not orthonormal");
  }
};

namespace detail {

inline void check_points(const PointMatrix& p) {
  if (p.cols() != 2 && p.cols() != 3) throw DomainError("points must be 2D or 3D");
  if (!p.allFinite()) throw DomainError("points must be finite");
}

} // namespace detail

/// Least-squares minimizer of sum_i |s R src_i + t - dst_i|^2 with det R = +1.
inline SimilarityTransform fit_similarity(const PointMatrix& src, const PointMatrix& dst) {
  detail::check_points(src);
  detail::check_points(dst);
  if (src.rows() != dst.rows() || src.cols() != dst.cols())
    throw DomainError("fit_similarity: point sets differ in shape");
  const auto dim = src.cols();
  if (src.rows() < dim + 1)
    throw DomainError("fit_similarity: need at least " + std::to_string(dim + 1) + " point pairs");

  // Rank check on the centred source: 2D needs spread, 3D needs a non-collinear cloud.
  const PointMatrix centred = src.rowwise() - src.colwise().mean();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
  const auto sv = svd.singularValues();
  const double scale_ref = std::max(1.0, src.cwiseAbs().maxCoeff()) * std::sqrt(static_cast<double>(src.rows()));
  const double floor = 1e-12 * scale_ref;
  if (sv(0) <= floor) throw DegenerateGeometryError("source points are coincident");
  if (dim == 3 && sv(1) <= 1e-12 * sv(0)) throw DegenerateGeometryError("source points are collinear");

  const Eigen::MatrixXd h = Eigen::umeyama(src.transpose(), dst.transpose(), true);
  SimilarityTransform t;
  const Eigen::MatrixXd sr = h.topLeftCorner(dim, dim);
  t.scale = std::pow(sr.determinant(), 1.0 / static_cast<double>(dim));
  t.rotation = sr / t.scale;
  t.translation = h.topRightCorner(dim, 1);
  return t;
}

/// s R p + t for every row p.
inline PointMatrix apply(const SimilarityTransform& t, const PointMatrix& pts) {
  if (pts.cols() != t.dim()) throw DomainError("apply: point dimension does not match transform");
  PointMatrix out = (t.scale * (pts * t.rotation.transpose())).rowwise() + t.translation.transpose();
  return out;
}

/// Transform equivalent to applying `first`, then `second`.
inline SimilarityTransform compose(const SimilarityTransform& second, const SimilarityTransform& first) {
  if (second.dim() != first.dim()) throw DomainError("compose: dimension mismatch");
  SimilarityTransform t;
  t.scale = second.scale * first.scale;
  t.rotation = second.rotation * first.rotation;
  t.translation = second.scale * second.rotation * first.translation + second.translation;
  return t;
}

/// Root-mean-square distance between apply(t, src) and dst.
inline double rms_residual(const PointMatrix& src, const PointMatrix& dst, const SimilarityTransform& t) {
  if (src.rows() != dst.rows() || src.cols() != dst.cols()) throw DomainError("rms_residual: shape mismatch");
  if (src.rows() == 0) return 0.0;
  return std::sqrt((apply(t, src) - dst).rowwise().squaredNorm().mean());
}

inline nlohmann::json to_json(const SimilarityTransform& t) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < t.dim(); ++r)
    for (int c = 0; c < t.dim(); ++c) rot.push_back(t.rotation(r, c));
  nlohmann::json tr = nlohmann::json::array();
  for (int r = 0; r < t.dim(); ++r) tr.push_back(t.translation(r));
  return {{"dim", t.dim()}, {"scale", t.scale}, {"rotation", rot}, {"translation", tr}};
}

inline SimilarityTransform transform_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    if (dim != 2 && dim != 3) throw FormatError("transform dimension must be 2 or 3");
    const auto& rot = j.at("rotation");
    const auto& tr = j.at("translation");
    if (rot.size() != static_cast<std::size_t>(dim * dim) || tr.size() != static_cast<std::size_t>(dim))
      throw FormatError("transform arrays do not match its dimension");
    SimilarityTransform t;
    t.scale = j.at("scale").get<double>();
    t.rotation.resize(dim, dim);
    t.translation.resize(dim);
    for (int r = 0; r < dim; ++r) {
      t.translation(r) = tr.at(r).get<double>();
      for (int c = 0; c < dim; ++c) t.rotation(r, c) = rot.at(r * dim + c).get<double>();
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed transform: ") + e.what());
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid transform: ") + e.what());
  }
}

} // namespace mrfviz

#endif
