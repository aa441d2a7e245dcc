#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hamosc/error.hpp"
#include "hamosc/mat2.hpp"
#include "generators.hpp"

using namespace hamosc;

namespace {

constexpr Cx I{0.0, 1.0};
constexpr double kEps = std::numeric_limits<double>::epsilon();

using gen::random_mat;

}  // namespace

TEST_CASE("basic arithmetic") {
  const Mat2 m{1.0, 2.0 * I, 3.0, 4.0 - I};
  CHECK(Mat2::identity() * m == m);
  CHECK(Mat2{1.0, I, 0.0, 2.0}.adjoint() == Mat2{1.0, 0.0, -I, 2.0});
  CHECK(Mat2::ones() * Mat2::ones() == 2.0 * Mat2::ones());
}

TEST_CASE("det, trace and inverse") {
  const Mat2 m{1.0, 2.0, 3.0, 4.0};
  CHECK(m.det() == Cx(-2.0));
  CHECK(m.trace() == Cx(5.0));
  CHECK(inverse(Mat2::diag(2.0, 4.0)) == Mat2::diag(0.5, 0.25));
  CHECK_FALSE(det_tr_inv(Mat2::ones()).inv.has_value());
  try {
    inverse(Mat2::ones());
    FAIL("expected Singular");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Singular);
  }
}

TEST_CASE("hermitian predicate") {
  CHECK(is_hermitian(Mat2{1.0, I, -I, 2.0}).is_hermitian);
  const HermFlag f = is_hermitian(Mat2{1.0, I, I, 2.0}, 1e-12);
  CHECK_FALSE(f.is_hermitian);
  CHECK(f.max_asymmetry == doctest::Approx(2.0));
  CHECK(is_hermitian(Mat2{1.5, -3.0, -3.0, 7.0}).is_hermitian);
}

TEST_CASE("positive semidefinite predicate") {
  CHECK(is_psd(Mat2::diag(1.0, 0.0), 1e-12));
  CHECK_FALSE(is_psd(Mat2::diag(1.0, -0.001), 1e-12));
  CHECK(is_psd(Mat2::ones(), 1e-12));
  CHECK_THROWS_AS(is_psd(Mat2{1.0, I, I, 1.0}, 1e-12), Error);
}

TEST_CASE("principal square root") {
  CHECK((sqrt_psd(Mat2::identity()) - Mat2::identity()).norm() < 1e-15);
  const Mat2 r = sqrt_psd(Mat2::ones());
  CHECK(r.e11.real() == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  CHECK((r - 0.7071067811865476 * Mat2::ones()).norm() < 1e-15);
  CHECK((sqrt_psd(Mat2::diag(4.0, 9.0)) - Mat2::diag(2.0, 3.0)).norm() < 1e-14);
  CHECK(sqrt_psd(Mat2::zero()) == Mat2::zero());
  try {
    sqrt_psd(Mat2::diag(1.0, -1.0));
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPSD);
  }
}

TEST_CASE("sandwich equation") {
  const Mat2 m{1.0, 2.0 - I, 0.5, 3.0};
  SandwichSolution s = solve_sandwich(Mat2::identity(), m);
  CHECK(s.F == Mat2::identity());
  CHECK(s.residual == 0.0);

  s = solve_sandwich(Mat2::diag(2.0, 3.0), Mat2::ones());
  CHECK((s.F - Mat2::diag(0.5, 1.0 / 3.0)).norm() < 1e-15);
  CHECK(s.residual <= 1e-14);

  s = solve_sandwich(0.7071067811865476 * Mat2::ones(), Mat2::zero());
  CHECK(s.F == Mat2::zero());
  CHECK(s.residual == 0.0);

  // Singular S with M in its range: the minimum-norm F solves exactly.
  const Mat2 S = 0.7071067811865476 * Mat2::ones();
  const Mat2 M = 0.3 * Mat2::ones();
  s = solve_sandwich(S, M);
  CHECK(s.residual < 1e-14);
}

TEST_CASE("algebra properties on random samples") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Mat2 a = random_mat(rng), b = random_mat(rng);
    const Cx t1 = (a * b).trace(), t2 = (b * a).trace();
    const double scale = a.norm() * b.norm();
    CHECK(std::abs(t1 - t2) <= 4 * kEps * scale);

    const Mat2 g = random_mat(rng, 3.0);
    const Mat2 psd = g * g.adjoint();
    const Mat2 r = sqrt_psd(psd);
    CHECK((r * r - psd).norm() <= 1e-10 * (1.0 + psd.norm()));
    CHECK(is_psd(r, tol_herm(r)));

    if (auto inv = try_inverse(a)) {
      const double k = a.norm() * inv->norm();
      CHECK((a * *inv - Mat2::identity()).max_abs() <= 8 * kEps * k);
      CHECK((*inv * a - Mat2::identity()).max_abs() <= 8 * kEps * k);
      const SandwichSolution s = solve_sandwich(a, b);
      CHECK((s.F - *inv).norm() <= 1e-10);
    }
  }
}
