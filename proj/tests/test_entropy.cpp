#include <cmath>

#include "qmslab/entropy.hpp"
#include "test_util.hpp"

using namespace qt;

namespace {

// Composite Simpson in u = ln r of r * (r + a L_rho)^{-1} (r + b R_rho)^{-1}(Y).
Mat doi_quadrature(const Mat& rho, double omega, const Mat& Y) {
  const int d = static_cast<int>(rho.rows());
  const double a = std::exp(omega / 2), b = std::exp(-omega / 2);
  const double lo = -40, hi = 40;
  const int n = 8000;
  const double h = (hi - lo) / n;
  Mat acc = Mat::Zero(d, d);
  for (int k = 0; k <= n; ++k) {
    const double r = std::exp(lo + k * h);
    const Mat left = (r * identity(d) + a * rho).inverse();
    const Mat right = (r * identity(d) + b * rho).inverse();
    const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    acc += w * r * (left * Y * right);
  }
  return acc * (h / 3);
}

LindbladModel complete_graph_heat(int m) {
  std::vector<Mat> ops;
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < m; ++s)
      if (r != s) ops.push_back(matrix_unit(m, r, s));
  return make_model(make_jump_set(ops), maximally_mixed(m));
}

}  // namespace

TEST_CASE("difference quotient kernel") {
  RVec x(3), y(3);
  x << 0.2, 0.5, 0.3;
  y = x;
  const auto k = log_difference_quotient(x, y);
  CHECK(max_abs((k.values - k.values.transpose()).cast<cplx>()) < 1e-15);
  CHECK((k.values.array() > 0).all());
  CHECK(k.values(0, 0) == doctest::Approx(1 / 0.2));
  CHECK(k.values(0, 1) == doctest::Approx((std::log(0.2) - std::log(0.5)) / (0.2 - 0.5)));
  // near-diagonal entries stay accurate
  RVec z(2);
  z << 0.4, 0.4 * (1 + 1e-8);
  CHECK(log_difference_quotient(z, z).values(0, 1) == doctest::Approx(1 / 0.4).epsilon(1e-7));
  CHECK_THROWS_AS(log_difference_quotient(-x, y), DomainViolation);
}

TEST_CASE("doi_apply") {
  Rng rng = make_rng(40, 0);
  const Mat Y = ginibre(rng, 3, 3);
  CHECK(max_abs(doi_apply(identity(3) / 3.0, 0.0, Y) - 3.0 * Y) < 1e-12);

  const Mat rho = diag({0.5, 0.3, 0.2});
  const Mat Yd = diag({1.0, 2.0, 3.0});
  CHECK(max_abs(doi_apply(rho, 0.0, Yd) - diag({2.0, 2.0 / 0.3, 15.0})) < 1e-12);

  const Mat r = random_density(rng, 3);
  const Mat Q = doi_quadrature(r, 0.7, Y);
  CHECK(max_abs(doi_apply(r, 0.7, Y) - Q) < 1e-7);
  CHECK(max_abs(doi_apply(r, -1.3, Y) - doi_quadrature(r, -1.3, Y)) < 1e-7);
  CHECK_THROWS_AS(doi_apply(diag({1.0, 0.0}), 0.0, identity(2)), DomainViolation);
}

TEST_CASE("entropy production: trace form against Fisher form") {
  Rng rng = make_rng(41, 0);
  for (int t = 0; t < 100; ++t) {
    const auto m = presets::random_model(rng, 2 + t % 4);
    const Mat r = random_density(rng, m.dim());
    const double ep = entropy_production_direct(m, r);
    const auto terms = entropy_production_fisher_terms(m, r);
    double sum = 0;
    for (double x : terms) {
      CHECK(x >= -1e-10);
      sum += x;
    }
    CHECK(ep >= -1e-10);
    CHECK(std::abs(ep - sum) <= 1e-8 * (1 + ep));
    CHECK(std::abs(entropy_production_fisher(m, 3.0 * r) - 3.0 * sum) <= 1e-8 * (1 + ep));
    CHECK(std::abs(entropy_production_direct(m, m.sigma.matrix())) < 1e-12);
    CHECK(std::abs(entropy_production_fisher(m, m.sigma.matrix())) < 1e-12);
  }
}

TEST_CASE("entropy production with an ancilla") {
  Rng rng = make_rng(42, 0);
  for (int t = 0; t < 20; ++t) {
    const auto m = presets::random_model(rng, 2 + t % 2);
    const auto ext = tensor_identity(m, 2);
    const Mat r = random_density(rng, 2 * m.dim());
    const double ep = entropy_production_direct(ext, r);
    CHECK(std::abs(ep - entropy_production_fisher(ext, r)) <= 1e-8 * (1 + ep));
  }
}

TEST_CASE("amplitude damping entropy production") {
  const auto m = presets::amplitude_damping(0.75);
  const Mat r = diag({0.9, 0.1});
  const double ep = entropy_production_direct(m, r);
  CHECK(ep > 0);
  CHECK(std::abs(ep - entropy_production_fisher(m, r)) < 1e-8);
}

TEST_CASE("entropy production is minus the derivative of relative entropy") {
  Rng rng = make_rng(43, 0);
  const double h = 1e-5;
  for (int t = 0; t < 30; ++t) {
    const auto m = presets::random_model(rng, 2 + t % 3);
    const auto fpa = fixed_point_algebra(m.jumps, m.sigma);
    const Mat Ls = build_generator(m).schrodinger;
    // states near the boundary make the h^2 truncation term dominate, so keep an eigenvalue floor
    const Mat r = 0.8 * random_density(rng, m.dim()) + 0.2 * identity(m.dim()) / m.dim();
    const Mat r0 = evolve(Ls, r, h);
    const double dp = relative_entropy_to_fixed_point(fpa, evolve(Ls, r, 2 * h));
    const double dm = relative_entropy_to_fixed_point(fpa, r);
    const double ep = entropy_production_direct(m, r0);
    CHECK(std::abs(-(dp - dm) / (2 * h) - ep) <= 1e-5 * std::max(ep, 1e-3));
  }
}

TEST_CASE("decay traces") {
  const auto dep = presets::depolarizing(2);
  const auto fpa = fixed_point_algebra(dep.jumps, dep.sigma);
  const auto flat = decay_trace(dep, fpa, dep.sigma.matrix(), geometric_time_grid(5.0, 10));
  for (double d : flat.entropies) CHECK(std::abs(d) < 1e-14);

  const Mat r0 = diag({0.95, 0.05});
  const auto grid = geometric_time_grid(10.0, 40);
  const auto tr = decay_trace(dep, fpa, r0, grid);
  CHECK(tr.monotone);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (tr.entropies[k] < 1e-12) break;
    const double slope = (std::log(tr.entropies[k]) - std::log(tr.entropies[k - 1])) / (grid[k] - grid[k - 1]);
    CHECK(slope <= -1 + 1e-6);
  }
  // rank-deficient start is regularised and reported
  const auto pure = decay_trace(dep, fpa, matrix_unit(2, 0, 0), grid);
  CHECK(pure.regularized);
  CHECK(pure.monotone);

  Rng rng = make_rng(44, 0);
  const auto m = presets::random_model(rng, 3);
  const auto fm = fixed_point_algebra(m.jumps, m.sigma);
  const Mat Ls = build_generator(m).schrodinger;
  const Mat r = random_density(rng, 3);
  const double h = 1e-5;
  const std::vector<double> ts{0.0, 0.5 - h, 0.5, 0.5 + h};
  const auto t3 = decay_trace(m, fm, r, ts);
  CHECK(t3.monotone);
  for (double e : t3.eps) CHECK(e >= -1e-10);
  CHECK(std::abs(-(t3.entropies[3] - t3.entropies[1]) / (2 * h) - t3.eps[2]) <= 1e-5 * std::max(t3.eps[2], 1e-3));
  CHECK_THROWS_AS(decay_trace(m, fm, r, {0.5, 1.0}), DomainViolation);
}

TEST_CASE("MLSI estimator on reference constants") {
  SamplerConfig cfg;
  cfg.samples = 200;
  cfg.seed = 7;

  const auto dep = presets::depolarizing(2);
  const auto fd = fixed_point_algebra(dep.jumps, dep.sigma);
  const auto est = estimate_mlsi(dep, fd, cfg);
  CHECK(est.value >= 1 - 1e-6);
  for (double r : est.ratios)
    if (!std::isnan(r)) CHECK(r >= 1 - 1e-6);
  const auto check = mlsi_ratio(dep, fd, est.argmin);
  REQUIRE(check.has_value());
  CHECK(std::abs(check->ratio() - est.value) <= 1e-9);

  for (int m : {3, 4}) {
    const auto g = complete_graph_heat(m);
    const auto fg = fixed_point_algebra(g.jumps, g.sigma);
    const auto e = estimate_mlsi(g, fg, cfg);
    CHECK(e.value >= 2 * m - 1e-6);
    for (double r : e.ratios)
      if (!std::isnan(r)) CHECK(r >= 2 * m - 1e-6);
  }
}

TEST_CASE("CLSI witness") {
  SamplerConfig cfg;
  cfg.samples = 60;
  cfg.seed = 9;
  cfg.refine_steps = 40;
  const auto dep = presets::depolarizing(2);
  const auto fd = fixed_point_algebra(dep.jumps, dep.sigma);
  const auto w = estimate_clsi_witness(dep, fd, 2, cfg);
  for (double r : w.ratios)
    if (!std::isnan(r)) CHECK(r >= 1 - 1e-6);

  // product states decouple the ancilla
  Rng rng = make_rng(45, 0);
  const auto m = presets::random_model(rng, 2);
  const auto fm = fixed_point_algebra(m.jumps, m.sigma);
  const auto ext = tensor_identity(m, 2);
  const Mat Estar = sup_tensor_identity(fm.E_star, 2, 2);
  for (int t = 0; t < 10; ++t) {
    const Mat a = random_density(rng, 2), b = random_density(rng, 2);
    const auto single = mlsi_ratio(m, fm, a);
    const Mat ab = tensor(a, b);
    const double D = relative_entropy(ab, hermitize(apply_super(Estar, ab)));
    const double ep = entropy_production_direct(ext, ab);
    CHECK(std::abs(ep / D - single->ratio()) < 1e-9);
  }

  const auto mlsi = estimate_mlsi(m, fm, cfg);
  const auto clsi = estimate_clsi_witness(m, fm, 2, cfg);
  CHECK(clsi.value <= mlsi.value + 1e-9);
}

TEST_CASE("estimator is consistent on a reducible embedding") {
  // model on C^2 embedded as the first block of C^3 with the third level untouched
  const auto m1 = presets::amplitude_damping(0.7);
  std::vector<Mat> ops;
  for (const auto& A : m1.jumps.ops) {
    Mat B = Mat::Zero(3, 3);
    B.topLeftCorner(2, 2) = A;
    ops.push_back(B);
  }
  const FullRankState s3 = diagonal_state({0.7 * 0.6, 0.3 * 0.6, 0.4});
  const auto m3 = make_model(make_jump_set(ops), s3);
  const auto f1 = fixed_point_algebra(m1.jumps, m1.sigma);
  const auto f3 = fixed_point_algebra(m3.jumps, m3.sigma);
  CHECK(f3.blocks.size() == 2);

  SamplerConfig cfg;
  cfg.samples = 100;
  cfg.refine_top = 0;
  const auto small = estimate_mlsi(m1, f1, cfg);
  auto embed = [](Rng& rng, std::size_t) {
    const Mat a = uniform(rng) < 0.5 ? random_boundary_state(rng, 2) : random_density(rng, 2);
    const double q = uniform(rng, 0.0, 0.5);
    Mat r = Mat::Zero(3, 3);
    r.topLeftCorner(2, 2) = (1 - q) * a;
    r(2, 2) = q;
    return r;
  };
  auto f = [&](const Mat& r) { return mlsi_ratio(m3, f3, r); };
  const auto big = optimize_ratio(3, f, cfg, true, "embedded", embed);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    Rng rng = make_rng(cfg.seed, i);
    const Mat r = embed(rng, i);
    const Mat a = r.topLeftCorner(2, 2) / r.topLeftCorner(2, 2).trace().real();
    const auto v = mlsi_ratio(m1, f1, a);
    if (v && !std::isnan(big.ratios[i])) CHECK(std::abs(v->ratio() - big.ratios[i]) < 1e-7 * v->ratio());
  }
  CHECK(big.value == doctest::Approx(small.value).epsilon(0.05));
}

TEST_CASE("unitarily covariant qubit estimate against a diagonal grid") {
  // Pauli jumps commute with every unitary conjugation, so diagonal states suffice
  const auto p = presets::paulis();
  const auto m = make_model(make_jump_set({p[0], p[1], p[2]}), maximally_mixed(2));
  const auto f = fixed_point_algebra(m.jumps, m.sigma);
  double grid = 1e300;
  for (int k = 1; k < 20000; ++k) {
    const double p = 0.5 + 0.5 * k / 20000.0;
    if (p >= 1) break;
    const auto v = mlsi_ratio(m, f, diag({p, 1 - p}));
    if (v) grid = std::min(grid, v->ratio());
  }
  SamplerConfig cfg;
  cfg.samples = 200;
  const auto est = estimate_mlsi(m, f, cfg);
  CHECK(std::abs(est.value - grid) <= 0.02 * grid);
}

TEST_CASE("worker count does not change estimates") {
  const auto dep = presets::depolarizing(3);
  const auto fd = fixed_point_algebra(dep.jumps, dep.sigma);
  SamplerConfig cfg;
  cfg.samples = 40;
  cfg.refine_steps = 20;
  const auto a = estimate_mlsi(dep, fd, cfg);
  cfg.workers = 3;
  const auto b = estimate_mlsi(dep, fd, cfg);
  CHECK(a.value == b.value);
  for (std::size_t i = 0; i < a.ratios.size(); ++i)
    CHECK((a.ratios[i] == b.ratios[i] || (std::isnan(a.ratios[i]) && std::isnan(b.ratios[i]))));
}

TEST_CASE("degenerate sampling is reported") {
  const auto dep = presets::depolarizing(2);
  const auto fd = fixed_point_algebra(dep.jumps, dep.sigma);
  SamplerConfig cfg;
  cfg.samples = 5;
  auto sigma_only = [](Rng&, std::size_t) -> Mat { return identity(2) / 2.0; };
  auto f = [&](const Mat& r) { return mlsi_ratio(dep, fd, r); };
  CHECK_THROWS_AS(optimize_ratio(2, f, cfg, true, "mlsi", sigma_only), DegenerateSampling);
}
