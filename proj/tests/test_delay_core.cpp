#include <doctest.h>

#include <cmath>

#include "mincon/delay_core.hpp"
#include "mincon/rng.hpp"

using namespace mincon;

namespace {

// x(k+1) = 0.5 x(k-1), scalar.
DelaySystemSpec half_lag() {
  DelaySystemSpec s;
  s.state_dim = 1;
  s.max_state_delay = 1;
  s.transition = [](std::span<const std::span<const double>> w, std::span<const double>) {
    return std::vector<double>{0.5 * w[0][0]};
  };
  return s;
}

StateSeries scalar(std::initializer_list<double> v) {
  StateSeries s(1);
  for (double x : v) s.push_back(std::vector<double>{x});
  return s;
}

}  // namespace

TEST_CASE("simulate scalar delay system") {
  const auto spec = half_lag();
  validate(spec);
  const auto x = simulate(spec, scalar({4, 2}), [](int) { return std::vector<double>{}; }, 6);
  REQUIRE(x.length() == 8);
  const std::vector<double> expect{4, 2, 2, 1, 1, 0.5, 0.5, 0.25};
  for (std::size_t k = 0; k < 8; ++k) CHECK(x(k, 0) == expect[k]);
}

TEST_CASE("validate rejects a nonzero origin map") {
  auto spec = half_lag();
  spec.transition = [](std::span<const std::span<const double>>, std::span<const double>) {
    return std::vector<double>{1.0};
  };
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("razumikhin on the scalar example is tight") {
  const auto x = simulate(half_lag(), scalar({4, 2}), [](int) { return std::vector<double>{}; }, 20);
  RazumikhinCertificate c;
  c.window = 1;
  c.kappa = 0.5;
  const auto r = check_razumikhin(x, 0.0, c, 1);
  CHECK(r.pass);
  CHECK(r.worst_slack == 0.0);
  c.kappa = 0.49;
  CHECK_FALSE(check_razumikhin(x, 0.0, c, 1).pass);
}

TEST_CASE("razumikhin zero trajectory and kappa zero") {
  const StateSeries zero(3, 10);
  RazumikhinCertificate c;
  c.window = 2;
  c.kappa = 0.0;
  auto r = check_razumikhin(zero, 0.0, c, 2);
  CHECK(r.pass);
  CHECK(r.worst_slack == 0.0);
  StateSeries bump = zero;
  bump(7, 1) = 1e-300;
  r = check_razumikhin(bump, 0.0, c, 2);
  CHECK_FALSE(r.pass);
  REQUIRE(r.first_violation_k);
  CHECK(*r.first_violation_k == 7);
}

TEST_CASE("razumikhin monotone in its parameters") {
  StateSeries x(2);
  SequentialRng rng(5, Stream::kFuzz);
  for (int k = 0; k < 60; ++k) x.push_back(std::vector<double>{rng.uniform(-1, 1) * std::pow(0.95, k), rng.uniform(-1, 1)});
  for (double kappa : {0.3, 0.6, 0.9})
    for (std::size_t m : {1u, 3u, 6u})
      for (double lu : {0.0, 0.5}) {
        RazumikhinCertificate c{m, kappa, lu, {}, 1.0, 1.0};
        if (!check_razumikhin(x, 0.4, c, 6).pass) continue;
        CHECK(check_razumikhin(x, 0.4, {m + 2, kappa, lu, {}, 1.0, 1.0}, 8).pass);
        CHECK(check_razumikhin(x, 0.4, {m, std::min(0.99, kappa + 0.05), lu, {}, 1.0, 1.0}, 6).pass);
        CHECK(check_razumikhin(x, 0.4, {m, kappa, lu + 0.1, {}, 1.0, 1.0}, 6).pass);
      }
}

TEST_CASE("certificate validation") {
  RazumikhinCertificate c;
  c.kappa = 1.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c.kappa = 0.5;
  c.lower_slope = 0.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  CHECK_THROWS_AS(check_razumikhin(StateSeries(1, 5), 0.0, {3, 0.5, 0, {}, 1, 1}, 2), std::invalid_argument);
}

TEST_CASE("lyapunov sandwich") {
  const auto x = scalar({1, -2, 3});
  RazumikhinCertificate c;
  c.kappa = 0.5;
  c.lyapunov = [](std::span<const double> v) { return 2 * std::abs(v[0]); };
  c.lower_slope = 2;
  c.upper_slope = 2;
  CHECK(check_lyapunov_sandwich(x, c).pass);
  c.upper_slope = 1.5;
  CHECK_FALSE(check_lyapunov_sandwich(x, c).pass);
}

TEST_CASE("envelope on exact geometric decay") {
  StateSeries x(1);
  for (int k = 0; k < 40; ++k) x.push_back(std::vector<double>{3.0 * std::pow(0.9, k)});
  const auto r = check_expiss_envelope(x, 0.0, {1.0, 0.9, 0.0}, {0, 0, 0, 0}, 1e-12);
  CHECK(r.check.pass);
  CHECK(r.tightest_overshoot == doctest::Approx(1.0));
  CHECK_FALSE(check_expiss_envelope(x, 0.0, {1.0, 0.85, 0.0}, {0, 0, 0, 0}).check.pass);
}

TEST_CASE("envelope dominated by the input term") {
  StateSeries x(2);
  for (int k = 0; k < 10; ++k) x.push_back(std::vector<double>{0.7, -0.7});
  CHECK(check_expiss_envelope(x, 0.7, {1.0, 0.1, 1.0}, {0, 0, 0, 0}).check.pass);
  CHECK(check_expiss_envelope(x, 0.7, {5.0, 0.1, 1.0}, {0, 0, 0, 0}).check.pass);
}

TEST_CASE("tightest overshoot matches brute force") {
  SequentialRng rng(9, Stream::kFuzz);
  for (int rep = 0; rep < 20; ++rep) {
    StateSeries x(3);
    for (int k = 0; k < 30; ++k)
      x.push_back(std::vector<double>{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    const double rho = rng.uniform(0.5, 0.99), gain = rng.uniform(0, 2), u = rng.uniform(0, 0.5);
    const EnvelopeWindow w{0, 3, 4, 0};
    const auto r = check_expiss_envelope(x, u, {1.0, rho, gain}, w);
    double xi = 0;
    for (std::size_t k = 0; k <= 3; ++k) xi = std::max(xi, sup_norm(x.at(k)));
    double p = 1.0;
    for (std::size_t k = 4; k < 30; ++k)
      p = std::max(p, (sup_norm(x.at(k)) - gain * u) / (std::pow(rho, static_cast<double>(k)) * xi));
    CHECK(r.tightest_overshoot == doctest::Approx(p).epsilon(1e-12));
    CHECK(check_expiss_envelope(x, u, {p * (1 + 1e-12), rho, gain}, w).check.pass);
  }
}

TEST_CASE("per-subsystem gains") {
  const StateSeries zero(4, 12);
  const std::vector<std::size_t> part{2, 2};
  const std::vector<double> slopes{1.0, 1.0};
  const auto t = per_subsystem_gains(zero, part, 2, 0.0, slopes, 2);
  CHECK(t.window_slopes == std::vector<double>{0.0, 0.0});
  CHECK(t.degenerate_skipped == 2 * t.steps);

  const auto x = simulate(half_lag(), scalar({4, 2}), [](int) { return std::vector<double>{}; }, 10);
  const std::vector<std::size_t> one{1};
  const std::vector<double> s1{0.0};
  const auto g = per_subsystem_gains(x, one, 1, 0.0, s1, 1, [](std::size_t, std::size_t k) {
    return std::optional<GainPartner>({0, k - 1});
  });
  CHECK(g.window_slopes[0] == 0.5);
  CHECK(g.pair_slopes.at({0, 0}) == 0.5);
}
