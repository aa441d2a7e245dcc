#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hamosc/error.hpp"
#include "hamosc/riccati.hpp"
#include "generators.hpp"

using namespace hamosc;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarFn constant(double v) {
  return [v](double) { return v; };
}

Scenario vector_schrodinger() { return make_family("vector_schrodinger", {}); }

double quasi_periodic_mu(double t) { return std::sin(t) + std::sin(std::numbers::sqrt2 * t); }

using gen::random_diag;

}  // namespace

TEST_CASE("I_gh transform") {
  CHECK(std::abs(I_gh({constant(0), constant(1)}, 0.0, 2.5) - 2.5) <= 1e-10);
  CHECK(I_gh({[](double t) { return std::sin(t); }, constant(0)}, 0.0, 3.0) == 0.0);
  CHECK(std::abs(I_gh({constant(1), constant(1)}, 0.0, 1.0) - 0.6321205588285577) <= 1e-9);
  CHECK(I_gh({constant(1), constant(1)}, 2.0, 2.0) == 0.0);
  CHECK_THROWS_AS(I_gh({constant(1), constant(1)}, 2.0, 1.0), Error);
}

TEST_CASE("I_gh agrees with nested quadrature") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), freq(0.2, 3.0), end(0.5, 3.0);
  for (int k = 0; k < 20; ++k) {
    const double a = u(rng), b = u(rng), c = freq(rng), d = u(rng), e = u(rng), f = freq(rng);
    const Kernel ker{[=](double t) { return a + b * std::sin(c * t); }, [=](double t) { return d + e * std::cos(f * t); }};
    const double xi = u(rng), t = xi + end(rng);
    const double nested = quadrature(
        [&](double tau) { return std::exp(-quadrature(ker.g, tau, t, 1e-13)) * ker.h(tau); }, xi, t, 1e-12);
    CHECK(std::abs(I_gh(ker, xi, t) - nested) <= 1e-8);
  }
}

TEST_CASE("integral condition") {
  const Window w{0.0, 2.0 * kPi};
  SUBCASE("sign-definite free terms pass for every partition") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
    for (int k = 0; k < 30; ++k) {
      const double a = u(rng), b = u(rng), c = pos(rng);
      const Kernel ker{[=](double t) { return a + b * std::cos(t); }, [=](double t) { return -c * (1.0 + std::sin(t)); }};
      Partition part{w.t0};
      const int n = 1 + k % 5;
      for (int i = 1; i < n; ++i) part.push_back(w.t0 + w.length() * i / n + 0.1 * pos(rng));
      CHECK(thm22_check(ker, part, w).holds);
    }
  }
  SUBCASE("positive free term fails at once") {
    const Thm22Result r = thm22_check({constant(0), constant(1)}, {0.0}, w);
    CHECK_FALSE(r.holds);
    REQUIRE(r.first_violation);
    CHECK(r.first_violation->first == 0);
    CHECK(r.first_violation->second < 0.2);
  }
  SUBCASE("h = -cos on one interval") {
    // Reference from a dense grid: the integral first becomes positive at t = 2.3459763584626616.
    const Thm22Result r = thm22_check({constant(0), [](double t) { return -std::cos(t); }}, {0.0}, w);
    CHECK_FALSE(r.holds);
    REQUIRE(r.first_violation);
    CHECK(r.first_violation->first == 0);
    CHECK(r.first_violation->second >= 2.3459763584626616 - 1e-6);
    CHECK(r.first_violation->second <= 2.3459763584626616 + w.length() / 64 + 1e-9);
  }
  SUBCASE("malformed partitions") {
    CHECK_THROWS_AS(thm22_check({constant(0), constant(-1)}, {1.0}, w), Error);
    CHECK_THROWS_AS(thm22_check({constant(0), constant(-1)}, {0.0, 3.0, 2.0}, w), Error);
  }
}

TEST_CASE("partition search") {
  const Window w{0.0, 40.0};
  PartitionSearch r = partition_search({constant(0), [](double t) { return -1.0 + 0.5 * std::sin(t); }}, w);
  CHECK(r.found);
  CHECK(r.partition == Partition{0.0, 40.0});

  r = partition_search({constant(0), constant(1)}, w);
  CHECK_FALSE(r.found);
  CHECK(r.stuck_at == 0.0);

  // -cos on [0, 4 pi]: each restart covers a stretch where the integral stays
  // nonpositive; the final partition must pass the fine check.
  const Kernel k{constant(0), [](double t) { return -std::cos(t); }};
  const Window w2{0.0, 4.0 * kPi};
  r = partition_search(k, w2);
  if (r.found) {
    CHECK(r.partition.front() == 0.0);
    CHECK(r.partition.back() == w2.t1);
    CHECK(thm22_check(k, Partition(r.partition.begin(), r.partition.end() - 1), w2).holds);
  }
  CHECK_THROWS_AS(partition_search(k, w2, 0), Error);
}

TEST_CASE("riccati comparison") {
  const Window w{0.0, 3.0};
  CHECK(thm21_compare_oracle(constant(1), constant(0.5), constant(-1), constant(-1), 0.3, 0.3, w));
  CHECK(thm21_compare_oracle(constant(1), constant(0), constant(-1), constant(0), 0.0, 0.0, w));
  CHECK_THROWS_AS(thm21_compare_oracle(constant(1), constant(0), constant(1), constant(0), 0.0, 0.0, w), Error);
  CHECK_THROWS_AS(thm21_compare_oracle(constant(-1), constant(0), constant(0), constant(0), 0.0, 0.0, w), Error);
  CHECK_THROWS_AS(thm21_compare_oracle(constant(1), constant(0), constant(0), constant(0), 1.0, 0.0, w), Error);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double f0 = pos(rng), f2 = pos(rng), g0 = u(rng), g1 = u(rng), h0 = u(rng), h1 = u(rng), gap = pos(rng);
    const double y1 = u(rng), y0 = y1 + pos(rng);
    const ScalarFn f = [=](double t) { return f0 + f2 * t * t; };
    const ScalarFn g = [=](double t) { return g0 + g1 * t; };
    const ScalarFn hh1 = [=](double t) { return h0 + h1 * std::sin(t); };
    const ScalarFn hh = [=](double t) { return hh1(t) - gap * (1.0 + std::cos(t)); };
    CHECK(thm21_compare_oracle(f, g, hh, hh1, y1, y0, w));
  }
}

TEST_CASE("chi for diagonal B") {
  const Scenario s = vector_schrodinger();
  const ChiProfile chi1 = chi_diag(s, 1);
  for (double t : {0.0, 0.7, 3.1, 10.0}) CHECK(std::abs(chi1.values(t) - quasi_periodic_mu(t)) <= 1e-12);
  CHECK(std::abs(chi_diag(s, 2).values(2.0) + 4.0) <= 1e-12);
  CHECK(std::abs(chi_diag(s, 1, ChiConvention::Literal).values(0.7) + quasi_periodic_mu(0.7)) <= 1e-12);

  const Scenario zero = make_constant("zero", {Mat2::zero(), Mat2::identity(), Mat2::zero()});
  CHECK(chi_diag(zero, 1).values(1.0) == 0.0);
  CHECK(chi_diag(zero, 2).values(1.0) == 0.0);

  const Scenario s3 = make_constant("diag", {Mat2{0.0, 0.0, 2.0, 0.0}, Mat2::diag(1.0, 2.0), Mat2::diag(1.0, 0.0)});
  CHECK(std::abs(chi_diag(s3, 1).values(0.0) + 3.0) <= 1e-14);
  CHECK_FALSE(chi_diag(s3, 1).b_zero_branch(0.0));

  const Scenario s4 = make_constant("b2 zero", {Mat2{0.0, 0.0, 2.0, 0.0}, Mat2::diag(1.0, 0.0), Mat2::diag(1.0, 0.0)});
  CHECK(chi_diag(s4, 1).values(0.0) == -1.0);
  CHECK(chi_diag(s4, 1).b_zero_branch(0.0));

  const Scenario full = make_constant("full", {Mat2::zero(), Mat2::ones(), Mat2::zero()});
  CHECK_THROWS_AS(chi_diag(full, 1), Error);
  CHECK_THROWS_AS(chi_diag(s, 3), Error);
}

TEST_CASE("frak M") {
  const Scenario zero_a = make_constant("a0", {Mat2::zero(), Mat2::diag(1.0, 2.0), Mat2::diag(1.0, 1.0)});
  for (double t : {0.0, 1.0, 5.0}) CHECK(frak_m(zero_a, t) == 0.0);

  const Scenario a12 = make_constant("a12", {Mat2{0.0, 1.0, 0.0, 0.0}, Mat2::identity(), Mat2::zero()});
  for (double t : {0.0, 0.5, 3.0, 20.0}) CHECK(std::abs(frak_m(a12, t) - 1.0) <= 1e-12);

  // Decaying weight: q = 1, r1 - r2 = 1, so M(t) = max exp(-(t - tau)) = 1.
  const Scenario decay = make_constant("decay", {Mat2{0.0, 1.0, 0.0, 1.0}, Mat2::identity(), Mat2::zero()});
  CHECK(std::abs(frak_m(decay, 4.0) - 1.0) <= 1e-9);
  // Growing weight: q = -1 gives M(t) = exp(t - t0).
  const Scenario grow = make_constant("grow", {Mat2{0.0, 1.0, 0.0, -1.0}, Mat2::identity(), Mat2::zero()});
  CHECK(std::abs(frak_m(grow, 2.0) / std::exp(2.0) - 1.0) <= 1e-8);

  // Gap r1 - r2 = 1 - t with q = 0 shrinks then grows: running maximum.
  const Scenario vee = make_family("diag_B", {{"b1", 1.0}, {"b2", 1.0}, {"a12_re", 1.0}, {"a21_re_t", 1.0}});
  CHECK(std::abs(frak_m(vee, 1.5) - 1.0) <= 1e-12);
  CHECK(std::abs(frak_m(vee, 3.0) - 2.0) <= 1e-12);
}

TEST_CASE("chi3 and chi4") {
  const Scenario zero_a = make_constant("a0", {Mat2::zero(), Mat2::identity(), Mat2::diag(2.0, -3.0)});
  for (SignConvention sc : {SignConvention::PlusC12, SignConvention::MinusC12}) {
    const Chi34 c = chi34(zero_a, 2.0, sc);
    CHECK(std::abs(c.chi3 + 2.0) <= 1e-12);
    CHECK(std::abs(c.chi4 - 3.0) <= 1e-12);
  }

  const Scenario s = vector_schrodinger();
  for (SignConvention sc : {SignConvention::PlusC12, SignConvention::MinusC12}) {
    const Chi34Profile p = chi34_profile(s, {0.0, 6.0}, sc);
    for (double t : {0.0, 0.5, 2.0, 6.0}) {
      const double want = 100.0 * t * t + quasi_periodic_mu(t);
      CHECK(std::abs(p.chi3(t) - want) <= 1e-8 * (1.0 + want));
      CHECK(std::abs(p.chi4(t) - (100.0 * t * t - t * t)) <= 1e-8 * (1.0 + 100.0 * t * t));
    }
  }
  CHECK(std::abs(chi34(s, 1.5, SignConvention::MinusC12).chi3 - (225.0 + quasi_periodic_mu(1.5))) <= 1e-7);

  // c12 real and r2' + r2 q = 1 constant: the two conventions differ.
  const Scenario split =
      make_family("diag_B", {{"b1", 1.0}, {"b2", 1.0}, {"a21_re", 0.0}, {"a21_re_t", 1.0}, {"c12_re", 1.0}});
  const Chi34 plus = chi34(split, 1.0, SignConvention::PlusC12);
  const Chi34 minus = chi34(split, 1.0, SignConvention::MinusC12);
  // r1 = 0, r2 = t: M(1) = 1; plus: E3 = int |1 + 1| = 2; minus: E3 = 0.
  CHECK(std::abs(plus.chi3 - (9.0 - 1.0)) <= 1e-8);
  CHECK(std::abs(minus.chi3 - (1.0 - 1.0)) <= 1e-8);

  const Scenario indefinite = make_constant("indef", {Mat2::zero(), Mat2::diag(1.0, -1.0), Mat2::zero()});
  CHECK_THROWS_AS(chi34(indefinite, 1.0, SignConvention::PlusC12), Error);
  const Scenario full = make_constant("full", {Mat2::zero(), Mat2::ones(), Mat2::zero()});
  CHECK_THROWS_AS(chi34(full, 1.0, SignConvention::PlusC12), Error);
}

TEST_CASE("subsystems") {
  const Scenario free = make_constant("free", {Mat2::zero(), Mat2::identity(), Mat2::zero()});
  for (Subsystem which : {Subsystem::Sys28, Subsystem::Sys211}) {
    const Trajectory tr = subsystem_solve(free, which, 1.0, 0.0, {0.0, 5.0});
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      CHECK(std::abs(tr.states[k][0] - 1.0 / (1.0 + tr.times[k])) <= 1e-9);
      CHECK(tr.states[k][1] == 0.0);
      CHECK(tr.states[k][2] == 0.0);
    }
    const Trajectory z = subsystem_solve(free, which, 0.0, 0.0, {0.0, 5.0});
    for (const State& y : z.states) {
      for (double v : y) CHECK(v == 0.0);
    }
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  int compared = 0;
  for (int k = 0; k < 10; ++k) {
    const Scenario s = random_diag(rng, true);
    const Mat2 z0{1.0 + u(rng), Cx{u(rng), u(rng)}, 0.0, 1.0 + u(rng)};
    const Mat2 z0h{z0.e11, z0.e12, std::conj(z0.e12), z0.e22};
    const Window w{0.0, 1.5};
    const RiccatiRun full = solve_matrix_riccati(s, z0h, w);
    if (full.blowup) continue;
    ++compared;
    const RatioFns rf = ratio_fns(s);
    const Trajectory t28 = subsystem_solve(s, Subsystem::Sys28, z0h.e11.real(), z0h.e12 + rf.r2(0.0), w,
                                           z0h.e22.real());
    const Trajectory t211 = subsystem_solve(s, Subsystem::Sys211, z0h.e22.real(), z0h.e12 + rf.r1(0.0), w,
                                            z0h.e11.real());
    for (std::size_t i = 0; i < full.traj.times.size(); i += 5) {
      const double t = full.traj.times[i];
      const Mat2 z = riccati_z(full.traj.states[i]);
      const State a = t28.dense_eval(t), b = t211.dense_eval(t);
      CHECK(std::abs(a[0] - z.e11.real()) <= 1e-6);
      CHECK(std::abs(Cx{a[1], a[2]} - (z.e12 + rf.r2(t))) <= 1e-6);
      CHECK(std::abs(a[3] - z.e22.real()) <= 1e-6);
      CHECK(std::abs(b[0] - z.e22.real()) <= 1e-6);
      CHECK(std::abs(Cx{b[1], b[2]} - (z.e12 + rf.r1(t))) <= 1e-6);
      CHECK(std::abs(b[3] - z.e11.real()) <= 1e-6);
    }
  }
  CHECK(compared >= 5);
}

TEST_CASE("diagonal bounds for y and v") {
  const Scenario free = make_constant("free", {Mat2::zero(), Mat2::identity(), Mat2::zero()});
  Lemma22Result r = lemma22_check(free, {0.0, 5.0});
  CHECK(r.held);
  CHECK(r.checked_until == 5.0);
  CHECK_FALSE(r.hypothesis_violation);

  r = lemma22_check(vector_schrodinger(), {0.0, 0.05});
  CHECK(r.held);
  CHECK(r.checked_until > 0.0);

  std::mt19937_64 rng(99);
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    const Scenario s = random_diag(rng, k % 2 == 1);
    r = lemma22_check(s, {0.0, 3.0});
    CHECK(r.held);
    if (r.checked_until > 0.0) ++checked;
  }
  CHECK(checked >= 25);

  const Scenario indefinite = make_constant("indef", {Mat2::zero(), Mat2::diag(1.0, -1.0), Mat2::zero()});
  CHECK_THROWS_AS(lemma22_check(indefinite, {0.0, 1.0}), Error);
}
