#include <doctest.h>

#include <fstream>

#include "support/testutil.hpp"
#include "tma/finite_difference.hpp"
#include "tma/interpolate.hpp"
#include "tma/nifti.hpp"

using namespace tma;

TEST_CASE("world and voxel transforms invert each other at voxel centers") {
  GridGeometry g(Vector3i(5, 6, 7), Vector3d(1.5, 2.0, 0.75), Vector3d(-3.0, 1.0, 2.5));
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const Vector3d v(i, j, k);
        CHECK((g.voxel_from_world(g.world_from_voxel(v)) - v).norm() == doctest::Approx(0.0));
      }
}

TEST_CASE("interpolation of a constant volume is that constant everywhere") {
  GridGeometry g = GridGeometry::isotropic(4, 1.25);
  Volume<double> v(g);
  v.values.setConstant(3.25);
  for (auto p : {Vector3d(0.1, 0.2, 0.3), Vector3d(-5, -5, -5), Vector3d(100, 0, 2)})
    CHECK(interpolate(v, p) == doctest::Approx(3.25));
}

TEST_CASE("interpolation reproduces nodal values exactly") {
  GridGeometry g(Vector3i(4, 5, 3), Vector3d(1.0, 2.0, 1.5), Vector3d(0.5, -1.0, 0.0));
  auto v = test::random_volume(g, 7);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        CHECK(interpolate(v, g.voxel_center(i, j, k)) == doctest::Approx(v(i, j, k)));
}

TEST_CASE("trilinear interpolation is exact on affine fields") {
  GridGeometry g = GridGeometry::isotropic(4, 1.0);
  auto v = test::affine_volume(g, Vector3d(2.0, 0.0, 0.0), 1.0);  // f(x) = 2x + 1
  const Vector3d p = g.world_from_voxel(Vector3d(1.5, 0.5, 2.5));
  CHECK(interpolate(v, p) == doctest::Approx(2.0 * p[0] + 1.0).epsilon(1e-12));

  // Random affine fields: relative error < 1e-10 anywhere inside the grid.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector3d slope(d(rng), d(rng), d(rng));
    const double offset = 10 + d(rng);
    auto f = test::affine_volume(g, slope, offset);
    const Vector3d vox(0.3 + 0.8 * rep / 20.0, 1.1, 1.9);
    const Vector3d p2 = g.world_from_voxel(vox);
    const double expect = slope.dot(p2) + offset;
    CHECK(std::abs(interpolate(f, p2) - expect) / std::abs(expect) < 1e-10);
  }
}

TEST_CASE("out-of-grid samples clamp to the nearest boundary value") {
  GridGeometry g = GridGeometry::isotropic(3, 1.0);
  auto v = test::affine_volume(g, Vector3d(1.0, 0.0, 0.0), 0.0);
  CHECK(interpolate(v, Vector3d(-100, 0, 0)) == doctest::Approx(v(0, 0, 0)));
  CHECK(interpolate(v, Vector3d(100, 1, 1)) == doctest::Approx(v(2, 0, 0)));
}

TEST_CASE("gradient of a constant volume is zero") {
  GridGeometry g = GridGeometry::isotropic(4, 2.0);
  Volume<double> v(g);
  v.values.setConstant(5.0);
  auto grad = gradient(v);
  CHECK(grad.vectors.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("gradient is exact for linear fields, including boundaries") {
  GridGeometry g(Vector3i(5, 4, 4), Vector3d(0.5, 1.0, 2.0), Vector3d(1, 2, 3));
  auto v = test::affine_volume(g, Vector3d(3.0, 0.0, 0.0), 0.5);  // f = 3x
  auto grad = gradient(v);
  for (std::int64_t i = 0; i < g.voxel_count(); ++i) {
    CHECK(grad.vectors(i, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(grad.vectors(i, 1) == doctest::Approx(0.0));
    CHECK(grad.vectors(i, 2) == doctest::Approx(0.0));
  }
}

TEST_CASE("central differences meet the Taylor remainder bound on a sine") {
  const int n = 32;
  const double h = 0.5;
  const double L = n * h;
  const double w = 2.0 * M_PI / L;
  GridGeometry g = GridGeometry::isotropic(n, h);
  Volume<double> v(g);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) v(i, j, k) = std::sin(w * g.voxel_center(i, j, k)[0]);
  auto grad = gradient(v);
  const double bound = w * w * w * h * h / 6.0;
  double max_err = 0.0;
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        const double truth = w * std::cos(w * g.voxel_center(i, j, k)[0]);
        max_err = std::max(max_err, std::abs(grad.vectors(g.index(i, j, k), 0) - truth));
      }
  CHECK(max_err <= bound * 1.0001);
}

TEST_CASE("gradient and jacobian are linear operators") {
  GridGeometry g = GridGeometry::isotropic(6, 1.0);
  auto f = test::random_volume(g, 3);
  auto h = test::random_volume(g, 4);
  const double a = 2.5, b = -1.25;
  Volume<double> combo(g);
  combo.values = a * f.values + b * h.values;
  auto lhs = gradient(combo);
  auto rhs = gradient(f);
  auto rhs2 = gradient(h);
  const double err =
      (lhs.vectors - (a * rhs.vectors + b * rhs2.vectors)).cwiseAbs().maxCoeff();
  CHECK(err < 1e-12);
}

TEST_CASE("jacobian of a linear map recovers the matrix at interior voxels") {
  GridGeometry g = GridGeometry::isotropic(5, 1.5);
  Matrix3<double> A;
  A << 0.1, 0.2, -0.3, 0.0, -0.4, 0.5, 0.25, 0.0, 0.75;
  VectorVolume<double> u(g);
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i)
        u.set(g.index(i, j, k), A * g.voxel_center(i, j, k));
  auto J = jacobian(u);
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i)
        CHECK((J.at(g.index(i, j, k)) - A).cwiseAbs().maxCoeff() < 1e-12);

  VectorVolume<double> zero(g);
  auto Jz = jacobian(zero);
  CHECK(Jz.entries.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("jacobian of a sine displacement meets the second-order bound") {
  const int n = 24;
  const double h = 1.0;
  GridGeometry g = GridGeometry::isotropic(n, h);
  VectorVolume<double> u(g);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        u.vectors(g.index(i, j, k), 0) = 0.1 * std::sin(g.voxel_center(i, j, k)[0]);
  auto J = jacobian(u);
  const double bound = 0.1 * h * h / 6.0;  // |f'''| = 0.1 for 0.1 sin(x)
  double max_err = 0.0;
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        const double truth = 0.1 * std::cos(g.voxel_center(i, j, k)[0]);
        max_err = std::max(max_err, std::abs(J.entries(g.index(i, j, k), 0) - truth));
      }
  CHECK(max_err <= bound * 1.0001);
}

TEST_CASE("volume file round trip preserves values and geometry bit-exactly") {
  auto dir = test::temp_dir("io");
  GridGeometry g(Vector3i(6, 5, 4), Vector3d(1.875, 1.875, 1.875), Vector3d(-4, 2, 0.5));

  auto v = test::random_volume(g, 21).cast<float>();
  write_volume(v, dir / "s.nii");
  auto back = read_scalar_volume<float>(dir / "s.nii");
  CHECK(back.geom == g);
  CHECK((back.values == v.values).all());

  auto u = test::random_vector_volume(g, 22, 3.0).cast<float>();
  write_volume(u, dir / "v.nii");
  auto uback = read_vector_volume<float>(dir / "v.nii");
  CHECK(uback.geom == g);
  for (int c = 0; c < 3; ++c)
    CHECK((uback.vectors.col(c).array() == u.vectors.col(c).array()).all());  // order kept

  // A second write of what was read is byte-identical to the first file.
  write_volume(back, dir / "s2.nii");
  std::ifstream f1(dir / "s.nii", std::ios::binary), f2(dir / "s2.nii", std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}

TEST_CASE("malformed headers are rejected with the offending field named") {
  auto dir = test::temp_dir("io_bad");
  GridGeometry g = GridGeometry::isotropic(3, 1.0);
  auto v = test::random_volume(g, 5).cast<float>();
  write_volume(v, dir / "ok.nii");

  auto corrupt = [&](std::streamoff off, auto value, const std::string& name) {
    std::filesystem::copy_file(dir / "ok.nii", dir / "bad.nii",
                               std::filesystem::copy_options::overwrite_existing);
    std::fstream f(dir / "bad.nii", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(off);
    f.write(reinterpret_cast<const char*>(&value), sizeof(value));
    f.close();
    CHECK_THROWS_WITH_AS(read_volume(dir / "bad.nii"), doctest::Contains(name.c_str()),
                         format_error);
  };

  corrupt(76 + 4, -1.875f, "pixdim");       // negative spacing
  corrupt(0, std::int32_t(123), "sizeof_hdr");
  corrupt(70, std::int16_t(64), "datatype");  // float64 payloads unsupported
}

TEST_CASE("oversized dims raise a capacity error") {
  auto dir = test::temp_dir("io_cap");
  GridGeometry g = GridGeometry::isotropic(3, 1.0);
  write_volume(test::random_volume(g, 5).cast<float>(), dir / "ok.nii");
  std::fstream f(dir / "ok.nii", std::ios::binary | std::ios::in | std::ios::out);
  const std::int16_t big = 32000;
  for (int i = 1; i <= 3; ++i) {
    f.seekp(40 + 2 * i);
    f.write(reinterpret_cast<const char*>(&big), sizeof(big));
  }
  f.close();
  CHECK_THROWS_AS(read_volume(dir / "ok.nii"), capacity_error);
}
