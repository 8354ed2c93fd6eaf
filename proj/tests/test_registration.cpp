#include <mrfviz/registration.hpp>

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <random>

using namespace mrfviz;

namespace {

PointMatrix random_points(Eigen::Index n, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  PointMatrix p(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index d = 0; d < dim; ++d) p(i, d) = g(rng);
  return p;
}

/// Random proper rotation from the QR factorization of a Gaussian matrix.
Eigen::MatrixXd random_rotation(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

SimilarityTransform random_transform(int dim, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  SimilarityTransform t;
  t.scale = scale;
  t.rotation = random_rotation(dim, seed);
  t.translation.resize(dim);
  for (int d = 0; d < dim; ++d) t.translation(d) = u(rng);
  return t;
}

} // namespace

TEST(Registration, IdentityFit) {
  for (int dim : {2, 3}) {
    const auto src = random_points(40, dim, 1);
    const auto t = fit_similarity(src, src);
    EXPECT_NEAR(t.scale, 1.0, 1e-12);
    EXPECT_LT((t.rotation - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(t.translation.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(rms_residual(src, src, t), 1e-12);
  }
}

TEST(Registration, RecoversSyntheticSimilarity) {
  std::uint64_t seed = 10;
  for (int dim : {2, 3})
    for (double scale : {0.5, 1.7})
      for (int rep = 0; rep < 5; ++rep, ++seed) {
        const auto truth = random_transform(dim, scale, seed);
        const auto src = random_points(60, dim, seed + 7);
        const auto dst = apply(truth, src);
        const auto t = fit_similarity(src, dst);
        EXPECT_NEAR(t.scale, scale, 1e-9);
        EXPECT_LT((t.rotation - truth.rotation).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((t.translation - truth.translation).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT(rms_residual(src, dst, t), 1e-9);
        EXPECT_NO_THROW(t.validate());
      }
}

TEST(Registration, NoisyResidualAtNoiseFloor) {
  const double sigma = 1e-3;
  for (int dim : {2, 3}) {
    const auto truth = random_transform(dim, 1.3, 99);
    const auto src = random_points(500, dim, 98);
    PointMatrix dst = apply(truth, src);
    std::mt19937_64 rng(97);
    std::normal_distribution<double> g(0.0, sigma);
    for (Eigen::Index i = 0; i < dst.rows(); ++i)
      for (Eigen::Index d = 0; d < dim; ++d) dst(i, d) += g(rng);
    const auto t = fit_similarity(src, dst);
    const double r = rms_residual(src, dst, t);
    EXPECT_LE(r, sigma * std::sqrt(static_cast<double>(dim)) * 1.1);
    EXPECT_GT(r, sigma * std::sqrt(static_cast<double>(dim)) * 0.8);
  }
}

TEST(Registration, InverseScaleRecovery) {
  for (double c : {0.1, 1.0, 10.0}) {
    const auto src = random_points(30, 3, 5);
    const PointMatrix scaled = c * src;
    EXPECT_NEAR(fit_similarity(scaled, src).scale, 1.0 / c, 1e-9);
  }
}

TEST(Registration, ProperRotationForReflectedTarget) {
  // dst is a mirror image of src: the best proper fit still has det R = +1.
  for (int dim : {2, 3}) {
    const auto src = random_points(50, dim, 21);
    PointMatrix dst = src;
    dst.col(0) *= -1.0;
    const auto t = fit_similarity(src, dst);
    EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-9);
    EXPECT_NO_THROW(t.validate());
    EXPECT_GT(rms_residual(src, dst, t), 0.1);
  }
}

TEST(Registration, EquivariantUnderCommonRotation) {
  const auto src = random_points(40, 3, 31);
  PointMatrix dst = apply(random_transform(3, 0.8, 32), src) + 0.05 * random_points(40, 3, 33);
  const auto base = rms_residual(src, dst, fit_similarity(src, dst));
  const Eigen::MatrixXd r = random_rotation(3, 34);
  const PointMatrix src_r = src * r.transpose();
  const PointMatrix dst_r = dst * r.transpose();
  EXPECT_NEAR(rms_residual(src_r, dst_r, fit_similarity(src_r, dst_r)), base, 1e-12);
}

TEST(Registration, ApplyAndCompose) {
  const auto p = random_points(20, 3, 41);
  EXPECT_EQ(apply(SimilarityTransform::identity(3), p), p);
  const auto a = random_transform(3, 0.7, 42), b = random_transform(3, 2.2, 43);
  const PointMatrix two_steps = apply(b, apply(a, p));
  EXPECT_LT((apply(compose(b, a), p) - two_steps).cwiseAbs().maxCoeff(), 1e-12);
  // Manual evaluation of s R p + t for one point.
  const Eigen::VectorXd q = a.scale * a.rotation * p.row(3).transpose() + a.translation;
  EXPECT_LT((apply(a, p).row(3).transpose() - q).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Registration, ShuffledCorrespondencesFitWorse) {
  const auto src = random_points(50, 2, 51);
  const auto dst = apply(random_transform(2, 1.1, 52), src);
  PointMatrix shuffled = dst;
  for (Eigen::Index i = 0; i + 1 < shuffled.rows(); i += 2) shuffled.row(i).swap(shuffled.row(i + 1));
  const double good = rms_residual(src, dst, fit_similarity(src, dst));
  const double bad = rms_residual(src, shuffled, fit_similarity(src, shuffled));
  EXPECT_GT(bad, good);
}

TEST(Registration, DegenerateGeometry) {
  PointMatrix same(5, 2);
  same.rowwise() = Eigen::RowVector2d(1.0, 2.0);
  EXPECT_THROW(fit_similarity(same, same), DegenerateGeometryError);
  PointMatrix line(6, 3);
  for (int i = 0; i < 6; ++i) line.row(i) = Eigen::RowVector3d(i, 2.0 * i, -1.0 * i);
  EXPECT_THROW(fit_similarity(line, line), DegenerateGeometryError);
  // Collinear points still fix a 2D similarity.
  PointMatrix line2(4, 2);
  for (int i = 0; i < 4; ++i) line2.row(i) = Eigen::RowVector2d(i, 0.5 * i);
  EXPECT_NO_THROW(fit_similarity(line2, line2));
}

TEST(Registration, Preconditions) {
  EXPECT_THROW(fit_similarity(random_points(2, 2, 1), random_points(2, 2, 2)), DomainError);
  EXPECT_THROW(fit_similarity(random_points(5, 2, 1), random_points(5, 3, 2)), DomainError);
  EXPECT_THROW(fit_similarity(random_points(5, 4, 1), random_points(5, 4, 2)), DomainError);
  EXPECT_THROW(apply(SimilarityTransform::identity(2), random_points(3, 3, 1)), DomainError);
}

TEST(Registration, JsonRoundTrip) {
  const auto t = random_transform(3, 1.7, 61);
  const auto back = transform_from_json(nlohmann::json::parse(to_json(t).dump()));
  EXPECT_EQ(back.scale, t.scale);
  EXPECT_EQ(back.rotation, t.rotation);
  EXPECT_EQ(back.translation, t.translation);
  auto j = to_json(t);
  j["rotation"][0] = 5.0;
  EXPECT_THROW(transform_from_json(j), FormatError);
  j = to_json(t);
  j.erase("scale");
  EXPECT_THROW(transform_from_json(j), FormatError);
}
