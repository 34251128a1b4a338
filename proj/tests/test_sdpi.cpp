#include <cmath>

#include "qmslab/sdpi.hpp"
#include "test_util.hpp"

using namespace qt;

namespace {

double binary_entropy_gap(double r) {
  // D((I + r n.sigma)/2 || I/2)
  const double a = (1 + r) / 2, b = (1 - r) / 2;
  double h = 0;
  if (a > 0) h -= a * std::log(a);
  if (b > 0) h -= b * std::log(b);
  return std::log(2.0) - h;
}

KrausChannel two_level_gns(double p0, double rate) {
  const double p1 = 1 - p0;
  const double down = rate, up = rate * p1 / p0;  // down: 1 -> 0, up: 0 -> 1
  std::vector<Mat> ops{std::sqrt(down) * matrix_unit(2, 0, 1), std::sqrt(up) * matrix_unit(2, 1, 0),
                       diag({std::sqrt(1 - up), std::sqrt(1 - down)})};
  return make_channel(ops, Picture::schrodinger, diagonal_state({p0, p1}));
}

SamplerConfig quick(std::size_t n, std::uint64_t seed) {
  SamplerConfig c;
  c.samples = n;
  c.seed = seed;
  c.refine_top = 0;
  return c;
}

}  // namespace

TEST_CASE("Kraus channel validation") {
  CHECK_THROWS_AS(make_channel({0.5 * identity(2)}), ModelError);
  CHECK_THROWS_AS(make_channel({}), ShapeError);
  const auto ch = channels::depolarizing(2, 0.3);
  Rng rng = make_rng(60, 0);
  const Mat r = random_density(rng, 2);
  CHECK(max_abs(ch.schrodinger(r) - (0.7 * r + 0.3 * identity(2) / 2.0)) < 1e-12);
  CHECK(max_abs(unvec(ch.schrodinger_superop() * vec(r), 2) - ch.schrodinger(r)) < 1e-12);
  const Mat X = random_hermitian(rng, 2);
  CHECK(max_abs(unvec(ch.heisenberg_superop() * vec(X), 2) - ch.heisenberg(X)) < 1e-12);
  CHECK(max_abs(trace_dual(ch.schrodinger_superop()) - ch.heisenberg_superop()) < 1e-12);
}

TEST_CASE("modular splitting of Kraus operators") {
  Rng rng = make_rng(61, 0);
  const auto ch = channels::random_gns(rng, 3);
  REQUIRE(ch.sigma);
  const Mat s = ch.sigma->matrix();
  for (std::size_t j = 0; j < ch.ops.size(); ++j)
    CHECK(max_abs(s * ch.ops[j] - std::exp(-ch.omegas[j]) * ch.ops[j] * s) < 1e-8);
  CHECK(max_abs(ch.schrodinger(s) - s) < 1e-10);

  // a unitary that does not commute with sigma cannot be split
  Mat H(2, 2);
  H << 1, 1, 1, -1;
  H /= std::sqrt(2.0);
  CHECK_THROWS_AS(channels::unitary(H, diagonal_state({0.7, 0.3})), DBCError);
}

TEST_CASE("unital counterpart") {
  SUBCASE("maximally mixed state gives the Heisenberg map") {
    Rng rng = make_rng(62, 0);
    const auto ch = channels::random_gns(rng, maximally_mixed(3));
    const auto phi0 = build_unital_counterpart(ch);
    CHECK(max_abs(phi0.heisenberg_superop() - ch.heisenberg_superop()) < 1e-10);
    CHECK(counterpart_diagnostics(ch, phi0).self_adjoint_deviation < 1e-10);
  }
  SUBCASE("qubit decay channel, entrywise intertwining") {
    const double p0 = 0.7;
    const auto ch = two_level_gns(p0, 0.5);
    const auto phi0 = build_unital_counterpart(ch);
    const FullRankState s = diagonal_state({p0, 1 - p0});
    // Phi_0(X) = sum_j e^{omega_j} M_j X M_j^*, evaluated by hand
    const double w = std::log((1 - p0) / p0);
    const double down = 0.5, up = 0.5 * (1 - p0) / p0;
    for (int a = 0; a < 4; ++a) {
      const Mat X = matrix_unit(2, a % 2, a / 2);
      Mat ref = down * std::exp(w) * matrix_unit(2, 0, 1) * X * matrix_unit(2, 1, 0) +
                up * std::exp(-w) * matrix_unit(2, 1, 0) * X * matrix_unit(2, 0, 1);
      const Mat D = diag({std::sqrt(1 - up), std::sqrt(1 - down)});
      ref += D * X * D;
      CHECK(max_abs(phi0.heisenberg(X) - ref) < 1e-12);
      CHECK(max_abs(ch.schrodinger(apply_gamma(s, X)) - apply_gamma(s, phi0.heisenberg(X))) < 1e-12);
    }
    const auto dg = counterpart_diagnostics(ch, phi0);
    CHECK(dg.unital_deviation < 1e-12);
    CHECK(dg.intertwining_deviation < 1e-12);
    CHECK(dg.self_adjoint_deviation > 1e-3);
  }
  SUBCASE("unitary conjugation commuting with sigma") {
    const Mat Z = diag({1, -1});
    const auto ch = channels::unitary(Z, diagonal_state({0.7, 0.3}));
    const auto phi0 = build_unital_counterpart(ch);
    Rng rng = make_rng(63, 0);
    const Mat X = ginibre(rng, 2, 2);
    CHECK(max_abs(phi0.heisenberg(X) - Z * X * Z) < 1e-12);
  }
  SUBCASE("random channels: Phi_0 coincides with the Heisenberg map") {
    for (int t = 0; t < 20; ++t) {
      Rng rng = make_rng(64, t);
      const auto ch = channels::random_gns(rng, 2 + t % 3);
      const auto phi0 = build_unital_counterpart(ch);
      const auto dg = counterpart_diagnostics(ch, phi0);
      CHECK(dg.unital_deviation < 1e-9);
      CHECK(dg.intertwining_deviation < 1e-9);
      CHECK(max_abs(phi0.heisenberg_superop() - ch.heisenberg_superop()) < 1e-9);
    }
  }
  SUBCASE("detailed balance violations") {
    Rng rng = make_rng(65, 0);
    const auto ch = channels::random_gns(rng, diagonal_state({0.6, 0.3, 0.1}));
    const auto wrong = make_channel(ch.ops, Picture::schrodinger, diagonal_state({0.5, 0.3, 0.2}));
    CHECK_THROWS_AS(build_unital_counterpart(wrong), DBCError);
    CHECK_THROWS_AS(build_unital_counterpart(make_channel(ch.ops)), ModelError);
  }
}

TEST_CASE("channel primitivity and fixed points") {
  CHECK_FALSE(is_primitive_channel(channels::identity(2)));
  CHECK(is_primitive_channel(channels::depolarizing(3, 0.4)));
  CHECK(max_abs(channel_conditional_expectation(channels::identity(2)) - sup_identity(2)) < 1e-12);
  const Mat E = channel_conditional_expectation(channels::depolarizing(2, 0.4));
  Rng rng = make_rng(66, 0);
  const Mat r = random_density(rng, 2);
  CHECK(max_abs(unvec(E * vec(r), 2) - identity(2) / 2.0) < 1e-10);

  const auto gns = channels::random_gns(rng, 3);
  const Mat Eg = channel_conditional_expectation(gns);
  CHECK(max_abs(unvec(Eg * vec(random_density(rng, 3)), 3) - gns.sigma->matrix()) < 1e-9);
}

TEST_CASE("SDPI constants") {
  const SamplerConfig cfg = quick(200, 7);
  SUBCASE("identity") {
    // every state is fixed, so any conditional expectation invariant under Phi_* can serve as E_*
    const auto ch = channels::identity(2);
    const auto est = estimate_sdpi(ch, channel_conditional_expectation(channels::depolarizing(2, 1.0)), cfg);
    CHECK(est.value == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("one-step projection") {
    const std::vector<double> p{0.5, 0.3, 0.2};
    std::vector<Mat> ops;
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) ops.push_back(std::sqrt(p[r]) * matrix_unit(3, r, s));
    const auto ch = make_channel(ops, Picture::schrodinger, diagonal_state(p));
    const auto est = estimate_sdpi(ch, channel_conditional_expectation(ch), cfg);
    CHECK(std::abs(est.value) < 1e-9);
  }
  SUBCASE("depolarizing qubit against a Bloch-ball grid") {
    const double p = 0.5;
    const auto ch = channels::depolarizing(2, p);
    SamplerConfig c = cfg;
    c.refine_top = 3;
    const auto est = estimate_sdpi(ch, channel_conditional_expectation(ch), c);
    // the ratio only depends on the Bloch radius; 10^4 radii on a log grid
    double grid = 0;
    for (int k = 0; k < 10000; ++k) {
      const double r = std::pow(10.0, -3.0 + 3.0 * k / 9999.0) * (1 - 1e-12);
      const double den = binary_entropy_gap(r);
      if (den > 1e-10) grid = std::max(grid, binary_entropy_gap((1 - p) * r) / den);
    }
    CHECK(grid == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(est.value == doctest::Approx(grid).epsilon(0.02));
    CHECK(est.value <= 1 + 1e-9);
  }
  SUBCASE("data processing on random channels") {
    for (int t = 0; t < 10; ++t) {
      Rng rng = make_rng(67, t);
      const auto ch = channels::random_gns(rng, 2 + t % 2);
      const auto est = estimate_sdpi(ch, channel_conditional_expectation(ch), quick(40, t));
      CHECK(est.value <= 1 + 1e-9);
      CHECK(est.value > 0);
    }
  }
  SUBCASE("E_* must be invariant") {
    const auto ch = channels::depolarizing(2, 0.5);
    CHECK_THROWS_AS(estimate_sdpi(ch, sup_identity(2) * 0.5, cfg), ModelError);
  }
}

TEST_CASE("SDPI comparison bound") {
  SUBCASE("maximally mixed state: equality case") {
    Rng rng = make_rng(68, 0);
    const auto ch = channels::random_gns(rng, maximally_mixed(2));
    const auto b = check_sdpi_bound(ch, quick(60, 3));
    CHECK(b.condition == doctest::Approx(1.0));
    CHECK(b.c_phi == doctest::Approx(b.c_phi0).epsilon(1e-9));
    CHECK(b.report.pass);
  }
  SUBCASE("random qubit channels, per-sample chain") {
    std::size_t checked = 0;
    for (int t = 0; t < 100; ++t) {
      Rng rng = make_rng(69, t);
      const auto ch = channels::random_gns(rng, 2);
      const auto b = check_sdpi_bound(ch, quick(10, t));
      for (const auto& r : b.chain) {
        CHECK(r.pass);
        CHECK(r.slack >= -1e-9);
      }
      checked += b.chain.size();
    }
    CHECK(checked > 900);
  }
  SUBCASE("near-degenerate state is loose but valid") {
    const double eps = 1e-3;
    Rng rng = make_rng(70, 0);
    const auto ch = channels::random_gns(rng, diagonal_state({1 - eps, eps}));
    const auto b = check_sdpi_bound(ch, quick(40, 1));
    CHECK(b.condition == doctest::Approx((1 - eps) / eps));
    CHECK(b.bound == doctest::Approx(1.0));
    for (const auto& r : b.chain) CHECK(r.pass);
  }
  CHECK_THROWS_AS(check_sdpi_bound(channels::identity(2), quick(5, 1)), PrimitivityError);
}

TEST_CASE("alpha2 of a unital generator") {
  // L0 = id - E with E(X) = tr(X) I/2
  const Mat E = vec(identity(2) / 2.0) * vec(identity(2)).adjoint();
  const Mat L0 = sup_identity(2) - E;
  SamplerConfig cfg = quick(300, 5);
  cfg.refine_top = 3;
  const auto est = alpha2_unital(L0, cfg);
  double grid = 1e300;
  for (int k = 1; k < 10000; ++k) {
    const double p = 0.5 + 0.5 * k / 10000.0;
    const auto v = alpha2_ratio(L0, diag({std::sqrt(p), std::sqrt(1 - p)}));
    if (v) grid = std::min(grid, v->ratio());
  }
  CHECK(est.value == doctest::Approx(grid).epsilon(0.02));
  CHECK(est.value >= grid * (1 - 1e-6));

  Rng rng = make_rng(71, 0);
  const Mat X = sqrt_psd(random_density(rng, 2));
  const auto a = alpha2_ratio(L0, X), b = alpha2_ratio(L0, 2.0 * X);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(std::abs(a->ratio() - b->ratio()) < 1e-10);
  CHECK_FALSE(alpha2_ratio(L0, identity(2)));

  CHECK_THROWS_AS(alpha2_unital(sup_identity(2) - vec(diag({0.7, 0.3})) * vec(identity(2)).adjoint(), cfg),
                  ModelError);
  CHECK_THROWS_AS(alpha2_unital(Mat::Zero(4, 4), cfg), PrimitivityError);

  // reference bound through the unital counterpart of a depolarizing channel
  const auto ch = channels::depolarizing(2, 0.5);
  const auto phi0 = build_unital_counterpart(ch);
  const auto a2 = alpha2_unital(sdpi_semigroup_generator(phi0), cfg);
  const double ref = sdpi_alpha2_bound(*ch.sigma, a2.value);
  const auto c = estimate_sdpi(ch, channel_conditional_expectation(ch), quick(200, 2));
  CHECK(c.value <= ref + 1e-6);
}
