#include <cmath>

#include "test_util.hpp"

using namespace qt;

TEST_CASE("spectral_decompose groups and reconstructs") {
  auto sd = spectral_decompose(identity(2), 1e-8);
  CHECK(sd.eigenvalues.size() == 1);
  CHECK(max_abs(sd.projections[0] - identity(2)) < 1e-14);

  sd = spectral_decompose(diag({0.75, 0.25}));
  REQUIRE(sd.eigenvalues.size() == 2);
  CHECK(sd.eigenvalues[0] == doctest::Approx(0.25));
  CHECK(max_abs(sd.projections[1] - matrix_unit(2, 0, 0)) < 1e-14);

  CHECK_THROWS_AS(spectral_decompose(matrix_unit(2, 0, 1)), HermitianViolation);

  Rng rng = make_rng(11, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + trial % 7;
    const Mat A = random_hermitian(rng, d);
    const auto s = spectral_decompose(A);
    CHECK(max_abs(s.reconstruct() - A) < 1e-10);
    Mat sum = Mat::Zero(d, d);
    for (std::size_t k = 0; k < s.projections.size(); ++k) {
      const Mat& P = s.projections[k];
      CHECK(max_abs(P * P - P) < 1e-10);
      sum += P;
      for (std::size_t l = k + 1; l < s.projections.size(); ++l) CHECK(max_abs(P * s.projections[l]) < 1e-10);
      if (k > 0) CHECK(s.eigenvalues[k] - s.eigenvalues[k - 1] > s.group_tol);
    }
    CHECK(max_abs(sum - identity(d)) < 1e-10);
  }
}

TEST_CASE("spectral_decompose matches a dense eigensolver") {
  Rng rng = make_rng(12, 0);
  const Mat A = random_hermitian(rng, 4);
  Eigen::ComplexEigenSolver<Mat> es(A);
  const auto sd = spectral_decompose(A);
  std::vector<double> ev;
  for (int k = 0; k < 4; ++k) ev.push_back(es.eigenvalues()(k).real());
  std::sort(ev.begin(), ev.end());
  for (int k = 0; k < 4; ++k) CHECK(sd.raw_values(k) == doctest::Approx(ev[k]).epsilon(1e-12));
}

TEST_CASE("matrix_function") {
  const Mat D = diag({std::exp(1.0), std::exp(2.0)});
  CHECK(max_abs(log_pd(D) - diag({1, 2})) < 1e-14);
  Rng rng = make_rng(13, 0);
  const Mat A = random_hermitian(rng, 3);
  CHECK(max_abs(matrix_function(A, [](double x) { return x; }) - A) < 1e-12);
  const Mat P = random_psd(rng, 3) + 0.1 * identity(3);
  const Mat E = matrix_function(P, [](double x) { return std::exp(x); });
  CHECK(max_abs(log_pd(E) - P) < 1e-10);
  CHECK_THROWS_AS(log_pd(diag({1.0, -1.0})), DomainViolation);
}

TEST_CASE("tensor and partial trace") {
  CHECK(max_abs(tensor(identity(2), identity(2)) - identity(4)) == 0.0);
  Rng rng = make_rng(14, 0);
  for (int t = 0; t < 10; ++t) {
    const Mat A = ginibre(rng, 2, 2), B = ginibre(rng, 2, 2), C = ginibre(rng, 2, 2), D = ginibre(rng, 2, 2);
    CHECK(std::abs(tensor(A, B).trace() - A.trace() * B.trace()) < 1e-12);
    CHECK(max_abs(tensor(A, B) * tensor(C, D) - tensor(A * C, B * D)) < 1e-12);
  }
  // slow index is the first factor
  const Mat K = tensor(matrix_unit(2, 0, 1), identity(3));
  CHECK(K(0, 3) == cplx(1.0));

  const Mat r = random_density(rng, 2), tau = random_density(rng, 3);
  CHECK(max_abs(partial_trace(tensor(r, tau), 2, 3, Keep::first) - r) < 1e-12);
  CHECK(max_abs(partial_trace(tensor(r, tau), 2, 3, Keep::second) - tau) < 1e-12);
  CHECK(max_abs(partial_trace(identity(4), 2, 2, Keep::first) - 2.0 * identity(2)) < 1e-14);
  const Mat X = ginibre(rng, 6, 6);
  cplx sum = 0;
  for (int i = 0; i < 6; ++i) sum += X(i, i);
  CHECK(std::abs(partial_trace(X, 2, 3, Keep::first).trace() - sum) < 1e-12);
  CHECK(std::abs(partial_trace(X, 3, 2, Keep::second).trace() - sum) < 1e-12);
  CHECK_THROWS_AS(partial_trace(X, 2, 2, Keep::first), ShapeError);
}

TEST_CASE("relative entropy") {
  Rng rng = make_rng(15, 0);
  const Mat r = random_density(rng, 3);
  CHECK(std::abs(relative_entropy(r, r)) < 1e-12);
  CHECK(relative_entropy(matrix_unit(2, 0, 0), identity(2) / 2.0) == doctest::Approx(std::log(2.0)));
  CHECK(relative_entropy(diag({0.9, 0.1}), diag({0.5, 0.5})) ==
        doctest::Approx(0.9 * std::log(1.8) + 0.1 * std::log(0.2)));
  CHECK_THROWS_AS(relative_entropy(identity(2) / 2.0, matrix_unit(2, 0, 0)), SupportError);
  // mass below the support tolerance outside supp(sigma) is not a violation
  CHECK_NOTHROW(relative_entropy(diag({1 - 1e-12, 1e-12}), matrix_unit(2, 0, 0)));

  for (int t = 0; t < 200; ++t) {
    const int d = 2 + t % 4;
    const Mat a = random_density(rng, d), b = random_density(rng, d);
    CHECK(relative_entropy(a, b) > 0.0);
    CHECK(relative_entropy(a, a) < 1e-10);
    CHECK(relative_entropy(a, (1 - 1e-12) * a + 1e-12 * b) < 1e-8);
  }
}

TEST_CASE("Lindblad relative entropy") {
  Rng rng = make_rng(16, 0);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + t % 3;
    const Mat X = random_psd(rng, d), Y = random_psd(rng, d) + 1e-3 * identity(d);
    CHECK(std::abs(lindblad_relative_entropy(X, X + 0.0 * Y)) < 1e-10);
    const double D = lindblad_relative_entropy(X, Y);
    CHECK(D >= -1e-12);
    CHECK(lindblad_relative_entropy(2.5 * X, 2.5 * Y) == doctest::Approx(2.5 * D).epsilon(1e-10));

    const Mat X2 = random_psd(rng, 2), Y2 = random_psd(rng, 2) + 1e-3 * identity(2);
    Mat Xs = Mat::Zero(d + 2, d + 2), Ys = Xs;
    Xs.topLeftCorner(d, d) = X;
    Xs.bottomRightCorner(2, 2) = X2;
    Ys.topLeftCorner(d, d) = Y;
    Ys.bottomRightCorner(2, 2) = Y2;
    CHECK(lindblad_relative_entropy(Xs, Ys) ==
          doctest::Approx(D + lindblad_relative_entropy(X2, Y2)).epsilon(1e-10));
  }
}

TEST_CASE("data processing for D_Lin under random channels") {
  Rng rng = make_rng(17, 0);
  for (int t = 0; t < 200; ++t) {
    const int d = 2 + t % 3;
    const KrausMap phi(random_kraus_channel(rng, d, 2 + t % 2, 2 + t % 3));
    const Mat X = random_psd(rng, d) + 1e-4 * identity(d), Y = random_psd(rng, d) + 1e-4 * identity(d);
    CHECK(lindblad_relative_entropy(phi.apply(X), phi.apply(Y)) <= lindblad_relative_entropy(X, Y) + 1e-9);
  }
}

TEST_CASE("full-rank states") {
  CHECK_THROWS_AS(FullRankState(diag({1.0, 0.0})), RankError);
  const FullRankState s = diagonal_state({0.75, 0.25});
  CHECK(max_abs(s.sqrt() * s.sqrt() - s.matrix()) < 1e-14);
  CHECK(max_abs(s.inverse() * s.matrix() - identity(2)) < 1e-14);
}

TEST_CASE("superoperator conventions") {
  Rng rng = make_rng(18, 0);
  const int d = 3;
  const Mat A = ginibre(rng, d, d), B = ginibre(rng, d, d), X = ginibre(rng, d, d);
  CHECK(max_abs(apply_super(sup_sandwich(A, B), X) - A * X * B) < 1e-12);
  CHECK(max_abs(apply_super(sup_left(A), X) - A * X) < 1e-12);
  CHECK(max_abs(apply_super(sup_right(B), X) - X * B) < 1e-12);
  CHECK(max_abs(apply_super(vec_transpose_permutation(d), X) - X.transpose()) < 1e-14);
  CHECK(vec(X)(1 + 2 * d) == X(1, 2));

  const Mat S = sup_sandwich(A, B);
  const Mat rho = ginibre(rng, d, d);
  CHECK(std::abs((apply_super(trace_dual(S), rho) * X).trace() - (rho * apply_super(S, X)).trace()) < 1e-10);

  const Mat Y = ginibre(rng, d * 2, d * 2);
  Mat expect = Mat::Zero(2 * d, 2 * d);
  // (S kron id)(Y) computed blockwise in the ancilla index
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Mat blk(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) blk(i, j) = Y(i * 2 + a, j * 2 + b);
      const Mat img = A * blk * B;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) expect(i * 2 + a, j * 2 + b) = img(i, j);
    }
  CHECK(max_abs(apply_super(sup_tensor_identity(S, d, 2), Y) - expect) < 1e-12);
}

TEST_CASE("gamma maps and KMS inner product") {
  Rng rng = make_rng(19, 0);
  const FullRankState u = maximally_mixed(3);
  CHECK(max_abs(gamma_map(u) - sup_identity(3) / 3.0) < 1e-14);
  const FullRankState s(random_density(rng, 3));
  CHECK(max_abs(apply_gamma(s, identity(3)) - s.matrix()) < 1e-12);
  CHECK(max_abs(gamma_inverse(s) * gamma_map(s) - sup_identity(3)) < 1e-10);
  CHECK(is_cp(gamma_map(s)));

  const FullRankState q = diagonal_state({0.75, 0.25});
  CHECK(std::abs(apply_gamma(q, matrix_unit(2, 0, 1))(0, 1) - std::sqrt(0.75) * std::sqrt(0.25)) < 1e-14);

  CHECK(std::abs(kms_inner(s, identity(3), identity(3)) - 1.0) < 1e-12);
  const Mat A = ginibre(rng, 3, 3), B = ginibre(rng, 3, 3);
  CHECK(kms_inner(s, A, A).real() >= 0.0);
  CHECK(std::abs(kms_inner(s, A, A).imag()) < 1e-12);
  CHECK(std::abs(kms_inner(u, A, B) - (A.adjoint() * B).trace() / 3.0) < 1e-12);
  CHECK(std::abs(vec(A).dot(kms_gram(s) * vec(B)) - kms_inner(s, A, B)) < 1e-12);

  // intertwining: Gamma^{1/2} Delta Gamma^{-1/2}... checked through sigma X sigma^{-1}
  CHECK(max_abs(apply_super(modular_operator(s), A) - s.matrix() * A * s.inverse()) < 1e-10);
}

TEST_CASE("Choi matrix, CP and TP checks") {
  const Mat id = sup_identity(2);
  const Mat C = choi_matrix(id);
  Vec omega = Vec::Zero(4);
  omega(0) = omega(3) = 1;
  CHECK(max_abs(C - omega * omega.adjoint()) < 1e-14);
  CHECK(is_cp(id));
  CHECK(is_tp(id));
  CHECK(is_unital(id));
  const Mat T = vec_transpose_permutation(2);
  CHECK(choi_min_eigenvalue(T) == doctest::Approx(-1.0));
  CHECK_FALSE(is_cp(T));
  CHECK(is_trace_nonincreasing(0.5 * id));
  CHECK_FALSE(is_trace_nonincreasing(1.5 * id));

  Rng rng = make_rng(20, 0);
  const KrausMap k(random_kraus_channel(rng, 3, 2, 3));
  CHECK(k.is_cptp());
  const KrausMap sq(random_kraus_channel(rng, 3, 3, 2));
  const Mat S = sup_sandwich(sq.ops[0], sq.ops[0].adjoint()) + sup_sandwich(sq.ops[1], sq.ops[1].adjoint());
  const KrausMap back = kraus_from_superop(S);
  CHECK(back.ops.size() == 2);
  const Mat X = ginibre(rng, 3, 3);
  CHECK(max_abs(back.apply(X) - sq.apply(X)) < 1e-10);
}

TEST_CASE("expm") {
  CHECK(max_abs(expm(Mat::Zero(3, 3)) - identity(3)) < 1e-15);
  const Mat D = diag({1.0, -2.0});
  CHECK(max_abs(expm(D) - diag({std::exp(1.0), std::exp(-2.0)})) < 1e-13);
  Rng rng = make_rng(21, 0);
  const Mat H = random_hermitian(rng, 4);
  const Mat U = expm(cplx(0, 1) * H);
  CHECK(max_abs(U * U.adjoint() - identity(4)) < 1e-12);
}
