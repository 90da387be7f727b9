#include <doctest.h>

#include <random>

#include "mub/linalg.hpp"

using namespace mub;

namespace {

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return (a + a.transpose()) / 2;
}

}  // namespace

TEST_CASE("lu_solve small cases") {
  const Eigen::Vector3d b(1, 2, 3);
  CHECK(lu_solve(Eigen::Matrix3d::Identity(), b).isApprox(b));

  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  CHECK(lu_solve(swap, Eigen::Vector2d(1, 2)).isApprox(Eigen::Vector2d(2, 1)));

  CHECK_THROWS_AS(lu_solve(Eigen::MatrixXd(2, 3), Eigen::Vector2d(1, 2)), ShapeError);
  CHECK_THROWS_AS(lu_solve(Eigen::Matrix2d::Identity(), Eigen::Vector3d(1, 2, 3)), ShapeError);
  CHECK_THROWS_AS(lu_solve(Eigen::Matrix2d::Zero(), Eigen::Vector2d(1, 2)), SingularSystemError);
}

TEST_CASE("lu_solve multiply-back") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 5 + trial;
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      b[i] = g(rng);
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
    }
    const Eigen::VectorXd p = lu_solve(a, b);
    CHECK((a * p - b).norm() <= 1e-8 * (1 + b.norm()));
  }
}

TEST_CASE("lu_solve solves the damped system") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  const double delta = 1e-10;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 6;
    // Rank n-1 plus a tiny perturbation.
    Eigen::MatrixXd u(n, n - 1);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n - 1; ++j) u(i, j) = g(rng);
    Eigen::MatrixXd a = u * u.transpose();
    a(0, 0) += 1e-13;
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) b[i] = g(rng);
    const Eigen::VectorXd p = lu_solve(a, b, delta);
    Eigen::MatrixXd damped = a;
    damped.diagonal().array() += delta;
    const double residual = (damped * p - b).norm();
    CHECK(residual <= 1e-6 * (damped.norm() * p.norm() + b.norm()));
  }
}

TEST_CASE("sym_eig") {
  Eigen::Matrix3d diag = Eigen::Vector3d(3, 1, 2).asDiagonal();
  auto e = sym_eig(diag);
  CHECK(e.eigenvalues.isApprox(Eigen::Vector3d(1, 2, 3)));

  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  e = sym_eig(swap);
  CHECK(e.eigenvalues[0] == doctest::Approx(-1).epsilon(1e-12));
  CHECK(e.eigenvalues[1] == doctest::Approx(1).epsilon(1e-12));

  SUBCASE("2x2 inputs match the characteristic polynomial roots") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 200; ++trial) {
      const double a = u(rng), b = u(rng), c = u(rng);
      Eigen::Matrix2d m;
      m << a, b, b, c;
      const double mean = (a + c) / 2;
      const double rad = std::sqrt((a - c) * (a - c) / 4 + b * b);
      const auto r = sym_eig(m);
      CHECK(std::abs(r.eigenvalues[0] - (mean - rad)) <= 1e-10);
      CHECK(std::abs(r.eigenvalues[1] - (mean + rad)) <= 1e-10);
    }
  }

  SUBCASE("reconstruction and orthonormality") {
    std::mt19937_64 rng(4);
    for (Eigen::Index n : {3, 8, 20, 40}) {
      const Eigen::MatrixXd a = random_symmetric(rng, n);
      const auto r = sym_eig(a);
      const Eigen::MatrixXd back = r.eigenvectors * r.eigenvalues.asDiagonal() * r.eigenvectors.transpose();
      CHECK((back - a).norm() <= 1e-10 * std::max(1.0, a.norm()));
      CHECK((r.eigenvectors.transpose() * r.eigenvectors - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-10);
      for (Eigen::Index k = 1; k < n; ++k) CHECK(r.eigenvalues[k - 1] <= r.eigenvalues[k]);
    }
  }

  CHECK_THROWS_AS(sym_eig(Eigen::MatrixXd(2, 3)), ShapeError);
}

TEST_CASE("psd_project") {
  Eigen::Matrix2d m;
  m << 1, 2, 2, 1;
  // Oracle: eigenvalues (-1, 3) with vectors (1,-1)/sqrt2, (1,1)/sqrt2; clamp -1 to 0.
  const Eigen::Vector2d v(1 / std::sqrt(2.0), 1 / std::sqrt(2.0));
  const Eigen::Matrix2d want = 3 * v * v.transpose();
  CHECK((psd_project(m) - want).norm() <= 1e-12);

  CHECK(psd_project(Eigen::Matrix3d(-Eigen::Matrix3d::Identity())).norm() <= 1e-15);

  std::mt19937_64 rng(5);
  for (Eigen::Index n : {4, 12, 30}) {
    const Eigen::MatrixXd a = random_symmetric(rng, n);
    const Eigen::MatrixXd p = psd_project(a);
    const Eigen::MatrixXd pp = psd_project(p);
    CHECK(sym_eig(p).eigenvalues.minCoeff() >= -1e-9);
    CHECK((pp - p).norm() <= 1e-9 * std::max(1.0, p.norm()));
    const Eigen::MatrixXd psd = a * a.transpose();
    CHECK((psd_project(psd) - psd).norm() <= 1e-9 * psd.norm());
  }
}
