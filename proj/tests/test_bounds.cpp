#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mincon/bounds.hpp"
#include "mincon/protocol.hpp"

using namespace mincon;

TEST_CASE("bound parameters") {
  const auto bp = bound_params(0.5, 4, 0, 0, 0.0);
  CHECK(bp.window == 3);
  CHECK(bp.rate == doctest::Approx(0.8408964152537145).epsilon(1e-15));
  CHECK(bp.overshoot == doctest::Approx(1.6817928305074290).epsilon(1e-15));
  CHECK(bp.input_gain == doctest::Approx(10.522689245761144).epsilon(1e-15));

  const auto one = bound_params(0.7, 1, 2, 1, 0.0);
  CHECK(one.window == 3);
  CHECK(one.input_gain == doctest::Approx(1.0 / 0.3).epsilon(1e-15));

  CHECK(bound_params(0.9286, 14, 3, 2, 0.01).window == 83);

  CHECK_THROWS_AS(bound_params(1.0, 4, 0, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_params(0.0, 4, 0, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_params(0.5, 0, 0, 0, 0.0), std::invalid_argument);
  CHECK(bound_params_from_json(bp.to_json()).rate == bp.rate);
}

TEST_CASE("bound parameter invariants") {
  for (double z : {0.1, 0.5, 0.93})
    for (int d : {1, 2, 14})
      for (int delta : {0, 3})
        for (int tau : {0, 2}) {
          const auto bp = bound_params(z, d, delta, tau, 0.01);
          CHECK(bp.window >= delta + tau);
          CHECK(bp.rate > 0.0);
          CHECK(bp.rate < 1.0);
          CHECK(bp.overshoot >= 1.0);
          CHECK(bp.input_gain > 0.0);
        }
}

TEST_CASE("bound series arithmetic") {
  const auto bp = bound_params(0.5, 4, 0, 0, 0.0);
  StateSeries x(2, 8);
  x(2, 1) = -8;
  const auto s = bound_series(bp, x);
  CHECK(s.initial_norm == 8);
  CHECK(s.first_asserted == 4);
  CHECK(s.values[4] == doctest::Approx(6.727171322029716).epsilon(1e-15));
  CHECK(s.values[0] == s.values[4]);
  for (std::size_t k = 5; k < 8; ++k) CHECK(s.values[k] < s.values[k - 1]);
  CHECK_THROWS_AS(bound_series(bp, StateSeries(2, 4)), std::invalid_argument);

  const auto noisy = bound_params(0.5, 4, 0, 0, 0.1);
  const auto sn = bound_series(noisy, x);
  CHECK(sn.values[7] - s.values[7] == doctest::Approx(noisy.input_gain * 0.1).epsilon(1e-12));
  StateSeries zero(2, 8);
  const auto sz = bound_series(bp, zero);
  for (double v : sz.values) CHECK(v == 0.0);
  CHECK(verify_bound(zero, bp).check.pass);
}

TEST_CASE("bound series equals the noise-free envelope") {
  const auto bp = bound_params(0.8, 3, 1, 1, 0.0);
  StateSeries x(1, 40);
  x(0, 0) = 2;
  const auto s = bound_series(bp, x);
  for (std::size_t k = s.first_asserted; k < 40; ++k)
    CHECK(s.values[k] == doctest::Approx(bp.overshoot * std::pow(bp.rate, k) * 2).epsilon(1e-14));
}

TEST_CASE("verify bound reports the violating step") {
  const auto bp = bound_params(0.5, 4, 0, 0, 0.0);
  StateSeries x(1, 10);
  x(0, 0) = 1;
  CHECK(verify_bound(x, bp).check.pass);
  x(6, 0) = 5;
  const auto r = verify_bound(x, bp);
  CHECK_FALSE(r.check.pass);
  CHECK(*r.check.first_violation_k == 6);
  CHECK(r.violating_error == 5);
}

TEST_CASE("path graph with delay and asynchrony stays under the bound") {
  const auto g = fixture::path4();
  const auto sc = compute_structural_constants(g);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    PerturbationModel pm;
    pm.delays = std::make_shared<UniformDelay>(s, 0, 1);
    // Gaps in {1, 2} leave at most one idle round, so delta = 1 exactly.
    const auto table = GapUniformSchedule(s, 0, 1, 2).draw(4, 200);
    pm.schedule = std::make_shared<FunctionSchedule>([table](NodeId i, Round k) { return table.updates(i, k); }, 1);
    pm.noise = std::make_shared<UniformNoise>(s, 0, 0.01, 1.01);
    pm.w_max = 1.01;
    auto tr = run_perturbed(g, pm, uniform_half_dmax_initial(g, sc, s), 200);
    to_error_coordinates(g, tr, sc);
    const auto bp = bound_params(sc, pm.window(), pm.max_delay(), pm.noise_amplitude());
    CHECK(bp.window == 11);
    CHECK(verify_bound(tr.errors, bp).check.pass);
    CHECK(check_razumikhin(tr.errors, tr.input_sup_norm, window_certificate(bp), 11, 1e-12).pass);
    CHECK(check_window_contraction(tr.errors, bp, tr.input_sup_norm, 1e-12).pass);
  }
}

TEST_CASE("zero perturbation: error reaches zero under a positive bound") {
  const auto g = fixture::path4();
  const auto sc = compute_structural_constants(g);
  auto tr = run_perturbed(g, PerturbationModel::unperturbed(), {{0, 5, 5, 5}}, 20);
  to_error_coordinates(g, tr, sc);
  const auto bp = bound_params(sc, 0, 0, 0.0);
  const auto r = verify_bound(tr.errors, bp);
  CHECK(r.check.pass);
  CHECK(r.final_error == 0.0);
  CHECK(r.final_bound > 0.0);
}
