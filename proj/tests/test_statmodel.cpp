#include <doctest.h>

#include "support/testutil.hpp"
#include "tma/statmodel.hpp"

using namespace tma;
using namespace tma::pca;

namespace {

MotionSample sample_of(const Eigen::VectorXd& v, const std::string& id) {
  return MotionSample{id, "/@/", v};
}

std::vector<MotionSample> random_samples(int n, int dim, unsigned seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, amp);
  std::vector<MotionSample> out;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v(dim);
    for (int j = 0; j < dim; ++j) v[j] = d(rng);
    out.push_back(sample_of(v, "s" + std::to_string(i)));
  }
  return out;
}

}  // namespace

TEST_CASE("identical samples give a zero-mode model with the sample as mean") {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(30, -1.0, 1.0);
  std::vector<MotionSample> samples(5, sample_of(v, "x"));
  auto model = fit(samples);
  CHECK(model.mode_count() == 0);
  CHECK((model.mean - v).norm() < 1e-12);
  CHECK((reconstruct(model, Eigen::VectorXd()) - v).norm() < 1e-12);
}

TEST_CASE("an antisymmetric pair yields one mode along the difference") {
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(24, 0.5);
  Eigen::VectorXd f(24);
  for (int i = 0; i < 24; ++i) f[i] = std::sin(0.4 * i + 0.3);
  auto model = fit({sample_of(mean + f, "a"), sample_of(mean - f, "b")});
  REQUIRE(model.mode_count() == 1);
  const double align = std::abs(model.components.col(0).dot(f.normalized()));
  CHECK(align == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(model.loadings(0, 0)) == doctest::Approx(f.norm()).epsilon(1e-10));
  CHECK(model.loadings(0, 0) == doctest::Approx(-model.loadings(1, 0)));
}

TEST_CASE("the Gram-route spectrum matches a dense covariance oracle") {
  // |D| = 50 voxels -> 150-dimensional fields, 8 subjects
  const int n = 8, dim = 150;
  auto samples = random_samples(n, dim, 2024);
  auto model = fit(samples);

  // oracle: form the full covariance of the centered samples directly
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) mean += s.values;
  mean /= double(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& s : samples) {
    const Eigen::VectorXd c = s.values - mean;
    cov += c * c.transpose();
  }
  cov /= double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(cov);

  REQUIRE(model.mode_count() == n - 1);
  for (int k = 0; k < n - 1; ++k) {
    const double oracle = dense.eigenvalues()[dim - 1 - k];
    CHECK(std::abs(model.variances[k] - oracle) / oracle < 1e-8);
    const double align =
        std::abs(model.components.col(k).dot(dense.eigenvectors().col(dim - 1 - k)));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("total variance is preserved and training samples reconstruct exactly") {
  const int n = 7, dim = 90;
  auto samples = random_samples(n, dim, 7, 2.0);
  auto model = fit(samples);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) mean += s.values;
  mean /= double(n);
  double total = 0.0;
  for (const auto& s : samples) total += (s.values - mean).squaredNorm();
  total /= double(n - 1);
  CHECK(std::abs(model.variances.sum() - total) / total < 1e-10);

  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd recon = reconstruct(model, model.loadings.row(i).transpose());
    CHECK((recon - samples[size_t(i)].values).norm() / samples[size_t(i)].values.norm() < 1e-8);
  }

  // centering: loadings sum to zero mode-wise
  CHECK(model.loadings.colwise().sum().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("reconstruction at +/- one coefficient is symmetric about the mean") {
  auto samples = random_samples(6, 60, 11);
  auto model = fit(samples);
  const double s1 = std::sqrt(model.variances[0]);
  Eigen::VectorXd plus(1), minus(1);
  plus << s1;
  minus << -s1;
  const Eigen::VectorXd up = reconstruct(model, plus);
  const Eigen::VectorXd dn = reconstruct(model, minus);
  CHECK((0.5 * (up + dn) - model.mean).norm() < 1e-10);

  Eigen::VectorXd toomany = Eigen::VectorXd::Zero(model.mode_count() + 1);
  CHECK_THROWS_AS(reconstruct(model, toomany), param_error);
}

TEST_CASE("the model is invariant to subject ordering") {
  auto samples = random_samples(6, 45, 3);
  auto model1 = fit(samples);
  std::vector<MotionSample> shuffled = {samples[4], samples[0], samples[5],
                                        samples[2], samples[1], samples[3]};
  auto model2 = fit(shuffled);
  CHECK((model1.variances - model2.variances).cwiseAbs().maxCoeff() < 1e-10);
  for (int k = 0; k < model1.mode_count(); ++k)
    CHECK((model1.components.col(k) - model2.components.col(k)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("planted 4:2:1 variance modes are reported at 57.1/28.6/14.3 percent") {
  const int n = 8, dim = 120;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 1.0);

  // three orthonormal directions
  Eigen::MatrixXd dirs(dim, 3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < dim; ++i) dirs(i, k) = d(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dirs);
  dirs = qr.householderQ() * Eigen::MatrixXd::Identity(dim, 3);

  // +/-1 design columns: orthogonal, zero-sum rows of an order-8 Hadamard set
  const int h1[] = {1, -1, 1, -1, 1, -1, 1, -1};
  const int h2[] = {1, 1, -1, -1, 1, 1, -1, -1};
  const int h3[] = {1, -1, -1, 1, 1, -1, -1, 1};
  const double lambda[3] = {4.0, 2.0, 1.0};
  std::vector<MotionSample> samples;
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(dim, 0.25);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = mean;
    v += h1[i] * std::sqrt(lambda[0] * (n - 1) / double(n)) * dirs.col(0);
    v += h2[i] * std::sqrt(lambda[1] * (n - 1) / double(n)) * dirs.col(1);
    v += h3[i] * std::sqrt(lambda[2] * (n - 1) / double(n)) * dirs.col(2);
    samples.push_back(sample_of(v, "s" + std::to_string(i)));
  }

  auto model = fit(samples);
  REQUIRE(model.mode_count() == 3);
  const double total = model.variances.sum();
  CHECK(100.0 * model.variances[0] / total == doctest::Approx(57.14).epsilon(0.035));
  CHECK(100.0 * model.variances[1] / total == doctest::Approx(28.57).epsilon(0.07));
  CHECK(100.0 * model.variances[2] / total == doctest::Approx(14.29).epsilon(0.14));

  auto csv = loadings_table({model});
  CHECK(csv.find("label,PC1,PC2,PC3") == 0);
  CHECK(csv.find("57.14") != std::string::npos);
}

TEST_CASE("loadings_table covers the degenerate spectra") {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(12);
  Eigen::VectorXd f = Eigen::VectorXd::Unit(12, 3);
  auto one_mode = fit({sample_of(mean + f, "a"), sample_of(mean - f, "b")});
  auto csv = loadings_table({one_mode});
  CHECK(csv.find("100.00,0.00,0.00") != std::string::npos);

  // two equal-variance planted modes split 50/50
  Eigen::VectorXd g1 = Eigen::VectorXd::Unit(12, 0), g2 = Eigen::VectorXd::Unit(12, 7);
  auto two = fit({sample_of(mean + g1 + g2, "a"), sample_of(mean + g1 - g2, "b"),
                  sample_of(mean - g1 + g2, "c"), sample_of(mean - g1 - g2, "d")});
  auto csv2 = loadings_table({two});
  CHECK(csv2.find("50.00,50.00,0.00") != std::string::npos);
}

TEST_CASE("flatten and unflatten over a region are inverse on the support") {
  GridGeometry g = GridGeometry::isotropic(6, 1.0);
  RegionMask<double> region(g);
  for (std::int64_t i = 0; i < g.voxel_count(); i += 3) region.values[i] = 1.0;
  auto field = test::random_vector_volume(g, 77, 2.0);
  auto flat = flatten_over_region(field, region);
  auto back = unflatten_over_region(flat, region);
  for (std::int64_t i = 0; i < g.voxel_count(); ++i) {
    if (region.values[i] > 0.5)
      CHECK((back.at(i) - field.at(i)).norm() == doctest::Approx(0.0));
    else
      CHECK(back.at(i).norm() == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(unflatten_over_region(flat.head(flat.size() - 3), region), shape_error);

  auto s1 = sample_of(flat, "a");
  auto s2 = sample_of(flat.head(flat.size() - 3), "b");
  CHECK_THROWS_AS(fit({s1, s2}), shape_error);
  CHECK_THROWS_AS(fit({s1}), param_error);
}
