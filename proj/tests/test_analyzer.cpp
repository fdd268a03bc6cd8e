#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "propstab/analyzer.hpp"
#include "propstab/error.hpp"
#include "propstab/simulator.hpp"
#include "test_util.hpp"

using namespace propstab;

namespace {

// Second-order closed loop k / (s^2 + d s + k): resonance peak and frequency.
SupGain second_order_peak(double d, double k) {
  const double zeta = d / (2.0 * std::sqrt(k));
  if (zeta >= 1.0 / std::sqrt(2.0)) return {1.0, 0.0};
  return {1.0 / (2.0 * zeta * std::sqrt(1.0 - zeta * zeta)), std::sqrt(k) * std::sqrt(1.0 - 2.0 * zeta * zeta)};
}

bool all_pass(const std::vector<VertexGain>& vs) {
  for (const auto& v : vs)
    if (!v.passes()) return false;
  return true;
}

GainOptions grid_options() {
  GainOptions o;
  o.method = GainMethod::Grid;
  return o;
}

}  // namespace

TEST_CASE("NetworkModel validation") {
  CHECK_THROWS_AS(NetworkModel(test::path_graph(3), 0.0, planar_subsystem(1.0)), Error);
  CHECK_THROWS_AS(NetworkModel(test::path_graph(3), -1.0, planar_subsystem(1.0)), Error);
  CHECK_THROWS_AS(NetworkModel(test::path_graph(3), 1.0, planar_subsystem(1.0), Vertex{3}), Error);
  const StateSpace tall(Matrix::Identity(2, 2) * -1.0, Matrix::Ones(2, 1), Matrix::Ones(2, 2));
  CHECK_THROWS_AS(NetworkModel(test::path_graph(3), 1.0, tall), Error);
}

TEST_CASE("planar template") {
  const auto ss = planar_subsystem(1.7);
  CHECK(ss.A()(1, 1) == -1.7);
  CHECK(match_planar(ss).value() == 1.7);
  CHECK_FALSE(match_planar(StateSpace(Matrix::Identity(2, 2), ss.B(), ss.C())).has_value());
}

TEST_CASE("local loop") {
  const NetworkModel net(test::path_graph(3), 1.0, planar_subsystem(2.0));
  const auto loop = local_loop(net, 1);
  CHECK(loop.gain == doctest::Approx(2.0));
  const Complex s(0.0, 0.9);
  const Complex T = 1.0 / (s * s + 2.0 * s);
  const Complex oracle = 2.0 * T / (1.0 + 2.0 * T);
  CHECK(std::abs(loop.siso_response(s) - oracle) < 1e-14);
  CHECK(std::abs(eval_transfer(loop.closed_loop, s)(0, 0) - oracle) < 1e-13);

  const NetworkModel line(test::directed_line(3), 1.0, planar_subsystem(1.0));
  CHECK_THROWS_WITH(local_loop(line, 0), doctest::Contains("NoIncomingEdges"));
}

TEST_CASE("sup gain of planar loops against closed-form peaks") {
  for (double d : {0.3, 0.7, 1.0, 1.3, 1.9, 2.0, 3.0}) {
    for (double k : {0.5, 1.0, 2.0, 3.5}) {
      const auto expect = second_order_peak(d, k);
      const auto loop = local_loop(planar_subsystem(d), k);
      const auto bis = sup_gain(loop);
      const auto grd = sup_gain(loop, grid_options());
      CAPTURE(d);
      CAPTURE(k);
      CHECK(bis.value == doctest::Approx(expect.value).epsilon(1e-7));
      CHECK(grd.value == doctest::Approx(expect.value).epsilon(1e-7));
      if (expect.omega > 0.0 && expect.value > 1.01) {
        CHECK(bis.omega == doctest::Approx(expect.omega).epsilon(1e-3));
      }
    }
  }
  const auto d1 = sup_gain(local_loop(planar_subsystem(1.0), 1.0));
  CHECK(d1.value == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-9));
  CHECK(d1.omega == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));
}

TEST_CASE("sup gain rejects unstable loops") {
  const StateSpace unstable(Matrix::Constant(1, 1, 1.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  CHECK_THROWS_WITH(sup_gain(local_loop(unstable, 0.5)), doctest::Contains("UnstableLoop"));
  CHECK_NOTHROW(sup_gain(local_loop(unstable, 2.0)));
}

TEST_CASE("bisection and grid agree on random systems") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 3);
    const StateSpace ss = test::random_stable(rng, n, m);
    const auto a = hinf_norm(ss);
    const auto b = hinf_norm(ss, grid_options());
    CAPTURE(trial);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
    // the reported frequency attains the norm
    const auto at = eval_transfer(ss, Complex(0.0, a.omega));
    const double sv = Eigen::JacobiSVD<CMatrix>(at).singularValues()(0);
    CHECK(sv == doctest::Approx(a.value).epsilon(1e-6));
  }
}

TEST_CASE("SISO real-part condition agrees with the gain test") {
  std::mt19937 rng(23);
  int compared = 0;
  for (int trial = 0; trial < 200 && compared < 60; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
    const StateSpace T = test::random_stable(rng, n, 1, 0.05);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    const double k = u(rng);
    const auto loop = local_loop(T, k);
    if (!is_hurwitz(loop.closed_loop.A(), 1e-6)) continue;
    const auto gain = sup_gain(loop);
    const auto re = min_real_part(T);
    const double margin_re = re.value + 1.0 / (2.0 * k);
    if (std::abs(gain.value - 1.0) < 1e-6 || std::abs(margin_re) < 1e-6) continue;
    CAPTURE(trial);
    CHECK((gain.value <= 1.0) == (margin_re >= 0.0));
    ++compared;
  }
  CHECK(compared >= 30);
}

TEST_CASE("siso_real_part_condition on the planar template") {
  const NetworkModel pass(test::path_graph(3), 1.0, planar_subsystem(2.0));
  const auto c = siso_real_part_condition(pass);
  CHECK(c.threshold == doctest::Approx(-0.25));
  CHECK(c.min_real == doctest::Approx(-0.25).epsilon(1e-6));
  CHECK(c.pass);
  const NetworkModel fail(test::path_graph(3), 1.0, planar_subsystem(1.9));
  CHECK_FALSE(siso_real_part_condition(fail).pass);
  const NetworkModel empty(WeightedDigraph(2), 1.0, planar_subsystem(1.0));
  CHECK(std::isinf(siso_real_part_condition(empty).threshold));
}

TEST_CASE("positive-real subsystems pass at every coupling strength") {
  // (s + 3) / ((s + 1)(s + 2)) = 2/(s+1) - 1/(s+2), Re = 6 / ((1 + w^2)(4 + w^2)) > 0
  Matrix A(2, 2);
  A << -1, 0, 0, -2;
  Matrix B(2, 1);
  B << 1, 1;
  Matrix C(1, 2);
  C << 2, -1;
  const StateSpace pr(A, B, C);
  for (double w : {0.0, 0.5, 3.0}) {
    const Complex t = eval_transfer(pr, Complex(0.0, w))(0, 0);
    CHECK(t.real() == doctest::Approx(6.0 / ((1 + w * w) * (4 + w * w))));
  }
  CHECK(is_positive_real(pr));
  CHECK_FALSE(is_positive_real(planar_subsystem(1.0)));

  std::mt19937 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSpace ss = trial == 0 ? pr : test::random_positive_real(rng, 1 + trial % 4);
    REQUIRE(is_positive_real(ss));
    const auto g = test::random_strongly_connected(rng, 3 + trial % 4);
    for (double alpha : {0.01, 1.0, 100.0}) {
      const NetworkModel net(g, alpha, ss);
      CHECK(all_pass(evaluate_local_loops(net)));
      CHECK(siso_real_part_condition(net).pass);
    }
  }
}

TEST_CASE("planar damping threshold") {
  const NetworkModel net(test::path_graph(4, 1.5), 0.8, planar_subsystem(2.0));
  const auto t = planar_damping_threshold(net);
  CHECK(t.d_star == doctest::Approx(std::sqrt(2.0 * 0.8 * 3.0)));
  CHECK(t.pass == (2.0 >= t.d_star));
  const NetworkModel generic(test::path_graph(3), 1.0, StateSpace(Matrix::Identity(1, 1) * -1.0, Matrix::Ones(1, 1),
                                                                  Matrix::Ones(1, 1)));
  CHECK_THROWS_WITH(planar_damping_threshold(generic), doctest::Contains("NotPlanarTemplate"));
}

TEST_CASE("planar threshold is monotone and bisection recovers d*") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = test::random_strongly_connected(rng, 3 + trial);
    const double alpha = 0.5 + 0.3 * trial;
    // sup gain - 1 grows like (d* - d)^2 / k below d*, so the crossing is resolved
    // with a tolerance far below the default certification slack.
    AnalysisOptions tight;
    tight.gain.bisect_tol = 1e-12;
    tight.certification_tol = 1e-10;
    auto passes = [&](double d) {
      return all_pass(evaluate_local_loops(NetworkModel(g, alpha, planar_subsystem(d)), tight));
    };
    const double d_star = planar_damping_threshold(NetworkModel(g, alpha, planar_subsystem(1.0))).d_star;
    bool seen_pass = false;
    for (double f = 0.5; f <= 1.5; f += 0.05) {
      const bool p = passes(f * d_star);
      if (seen_pass) CHECK(p);
      seen_pass = seen_pass || p;
    }
    double lo = 0.5 * d_star;
    double hi = 1.5 * d_star;
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      (passes(mid) ? hi : lo) = mid;
    }
    CAPTURE(trial);
    CHECK(std::abs(hi - d_star) < 1e-4);
  }
}

TEST_CASE("local requirement is monotone in alpha for the planar template") {
  const auto g = test::path_graph(5);
  const auto ss = planar_subsystem(1.5);
  bool failed = false;
  for (double alpha = 0.1; alpha <= 3.0; alpha += 0.1) {
    const bool p = all_pass(evaluate_local_loops(NetworkModel(g, alpha, ss)));
    if (failed) CHECK_FALSE(p);
    failed = failed || !p;
  }
  CHECK(failed);
}

TEST_CASE("pole screen") {
  CHECK(pole_screen(planar_subsystem(1.0)) == ScreenVerdict::NoVerdict);
  const StateSpace stable(Matrix::Constant(1, 1, -1.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  CHECK(pole_screen(stable) == ScreenVerdict::StableForSmallAlpha);
  const StateSpace unstable(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  CHECK(pole_screen(unstable) == ScreenVerdict::NeverPropagationStable);
  // small alpha passes for the strictly stable system
  const NetworkModel net(test::path_graph(4), 1e-3, stable);
  CHECK(all_pass(evaluate_local_loops(net)));
}

TEST_CASE("manifold stability") {
  SUBCASE("3-cycle boundary near d = 0.7071") {
    // A - alpha lambda BC with lambda = 1.5 +- 0.866j is Hurwitz iff d^2 > 0.75 / 1.5
    const auto g = test::directed_cycle(3);
    CHECK(manifold_stable(NetworkModel(g, 1.0, planar_subsystem(0.72))).stable);
    CHECK_FALSE(manifold_stable(NetworkModel(g, 1.0, planar_subsystem(0.69))).stable);
  }
  SUBCASE("modal and full-matrix tests agree") {
    std::mt19937 rng(37);
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const auto g = test::random_strongly_connected(rng, 2 + trial % 6);
      const StateSpace ss = trial % 2 ? planar_subsystem(0.2 + 0.1 * (trial % 20))
                                      : test::random_stable(rng, 1 + trial % 3, 1, -0.5);
      const NetworkModel net(g, 0.3 + 0.1 * (trial % 10), ss);
      const auto rep = manifold_stable(net);
      double closest = 1e9;
      for (const auto& m : rep.modes) closest = std::min(closest, std::abs(m.spectral_abscissa));
      if (closest < 1e-5) continue;
      CAPTURE(trial);
      CHECK(rep.stable == manifold_stable_full_matrix(net));
      ++compared;
    }
    CHECK(compared >= 20);
  }
  SUBCASE("non-diagonalizable Laplacian falls back to the full matrix") {
    const NetworkModel net(test::directed_line(3), 1.0, planar_subsystem(1.0));
    const auto rep = manifold_stable(net);
    CHECK_FALSE(rep.laplacian_diagonalizable);
    CHECK(rep.used_full_matrix);
    CHECK(rep.stable);
  }
}

TEST_CASE("certify") {
  SUBCASE("bidirectional path at the threshold is stable") {
    const auto r = certify(NetworkModel(test::path_graph(3), 1.0, planar_subsystem(2.0)));
    CHECK(r.status == CertificateStatus::CertifiedStable);
    CHECK_FALSE(r.counterexample.has_value());
  }
  SUBCASE("directed line below threshold has a counterexample") {
    const auto r = certify(NetworkModel(test::directed_line(3), 1.0, planar_subsystem(1.0)));
    CHECK(r.status == CertificateStatus::CertifiedUnstable);
    REQUIRE(r.counterexample.has_value());
    CHECK(r.counterexample->gain == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-8));
    CHECK(r.counterexample->omega == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));
    CHECK(r.vertices[0].status == LoopStatus::Exempt);
  }
  SUBCASE("multi-input violations stay undecided") {
    const auto r = certify(NetworkModel(test::path_graph(6), 1.0, planar_subsystem(1.9)));
    CHECK(r.status == CertificateStatus::Undecided);
    CHECK_FALSE(r.causes.empty());
  }
  SUBCASE("unstable manifold") {
    const auto r = certify(NetworkModel(test::directed_cycle(3), 1.0, planar_subsystem(0.5)));
    CHECK(r.status == CertificateStatus::CertifiedUnstable);
    CHECK_FALSE(r.manifold.stable);
  }
  SUBCASE("bisect and grid give the same verdict") {
    AnalysisOptions o;
    o.gain.method = GainMethod::Grid;
    for (double d : {1.0, 1.9, 2.0, 2.5}) {
      const NetworkModel net(test::path_graph(4), 1.0, planar_subsystem(d));
      CHECK(certify(net).status == certify(net, o).status);
    }
  }
}

TEST_CASE("impervious regions") {
  // path 1-2-3 plus a sink 4 fed by all three, and 4 -> 1 closing the loop
  const WeightedDigraph g(4, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}, {0, 3, 1.0}, {1, 3, 1.0},
                              {2, 3, 1.0}, {3, 0, 1.0}});
  const NetworkModel net(g, 1.0, planar_subsystem(2.2));
  const auto ok = certify_impervious(net, {0, 1, 2});
  CHECK(ok.pass);
  const auto bad = certify_impervious(net, {3, 0});
  CHECK_FALSE(bad.pass);
  CHECK_THROWS_WITH(certify_impervious(net, {0, 2}), doctest::Contains("NotStronglyConnected"));
}
