#include "mincon/delay_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mincon {

void StateSeries::push_back(std::span<const double> x) {
  if (x.size() != dim_) throw std::invalid_argument("state dimension mismatch");
  data_.insert(data_.end(), x.begin(), x.end());
}

double sup_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

std::vector<std::size_t> DelaySystemSpec::blocks() const {
  if (partition.empty()) return {state_dim};
  return partition;
}

void validate(const DelaySystemSpec& spec) {
  if (spec.state_dim == 0) throw std::invalid_argument("state_dim must be positive");
  if (spec.max_state_delay < 0 || spec.input_delay < 0)
    throw std::invalid_argument("delays must be nonnegative");
  if (!spec.transition) throw std::invalid_argument("transition is not set");
  auto parts = spec.blocks();
  if (std::accumulate(parts.begin(), parts.end(), std::size_t{0}) != spec.state_dim)
    throw std::invalid_argument("partition sizes do not sum to state_dim");

  const std::vector<double> zero(spec.state_dim, 0.0);
  std::vector<std::span<const double>> window(static_cast<std::size_t>(spec.max_state_delay) + 1,
                                              std::span<const double>(zero));
  const std::vector<double> u(spec.input_dim, 0.0);
  auto next = spec.transition(window, u);
  if (next.size() != spec.state_dim) throw std::invalid_argument("transition returned wrong dimension");
  if (sup_norm(next) != 0.0) throw std::invalid_argument("transition(0, 0) must be 0");
}

StateSeries simulate(const DelaySystemSpec& spec, const StateSeries& initial_window,
                     const std::function<std::vector<double>(int)>& input, int steps) {
  validate(spec);
  const auto depth = static_cast<std::size_t>(spec.max_state_delay) + 1;
  if (initial_window.dim() != spec.state_dim || initial_window.length() != depth)
    throw std::invalid_argument("initial window must hold max_state_delay + 1 states");
  StateSeries out = initial_window;
  out.reserve(depth + static_cast<std::size_t>(std::max(steps, 0)));
  std::vector<std::span<const double>> window(depth);
  const std::vector<double> zero_input(spec.input_dim, 0.0);
  for (int k = 0; k < steps; ++k) {
    const std::size_t now = static_cast<std::size_t>(k) + depth - 1;
    // Spans are taken after any reallocation of the previous push_back.
    for (std::size_t l = 0; l < depth; ++l) window[l] = out.at(now + 1 - depth + l);
    const int t = k - spec.input_delay;
    std::vector<double> u = (t >= 0 && input) ? input(t) : zero_input;
    if (u.size() != spec.input_dim) throw std::invalid_argument("input has wrong dimension");
    auto next = spec.transition(window, u);
    if (next.size() != spec.state_dim) throw std::invalid_argument("transition returned wrong dimension");
    out.push_back(next);
  }
  return out;
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j{{"check", check},
                   {"pass", pass},
                   {"worst_slack", std::isfinite(worst_slack) ? nlohmann::json(worst_slack)
                                                              : nlohmann::json(nullptr)},
                   {"checked", checked},
                   {"violations", violations},
                   {"params", params}};
  j["first_violation_k"] = first_violation_k ? nlohmann::json(*first_violation_k) : nlohmann::json(nullptr);
  return j;
}

void validate(const RazumikhinCertificate& cert) {
  if (!(cert.kappa >= 0.0 && cert.kappa < 1.0)) throw std::invalid_argument("kappa must lie in [0, 1)");
  if (!(cert.input_gain >= 0.0)) throw std::invalid_argument("input gain must be nonnegative");
  if (!(cert.lower_slope > 0.0) || !(cert.upper_slope > 0.0))
    throw std::invalid_argument("bound slopes must be positive");
}

namespace {

std::vector<double> evaluate(const StateSeries& x, const StateFunction& v) {
  std::vector<double> out(x.length());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = v ? v(x.at(k)) : sup_norm(x.at(k));
  return out;
}

void record(CheckReport& r, std::size_t k, double slack, double tolerance) {
  ++r.checked;
  r.worst_slack = std::min(r.worst_slack, slack);
  if (slack < -tolerance) {
    ++r.violations;
    if (r.pass) r.first_violation_k = k;
    r.pass = false;
  }
}

}  // namespace

CheckReport check_razumikhin(const StateSeries& x, double input_norm,
                             const RazumikhinCertificate& cert, std::size_t start_k,
                             double tolerance) {
  validate(cert);
  if (start_k < cert.window) throw std::invalid_argument("start_k must be >= window M");
  if (x.length() < start_k + 2) throw std::invalid_argument("trace too short for start_k");

  CheckReport r;
  r.check = "razumikhin";
  r.worst_slack = std::numeric_limits<double>::infinity();
  r.params = {{"kappa", cert.kappa}, {"window", cert.window}, {"input_gain", cert.input_gain},
              {"input_norm", input_norm}, {"start_k", start_k}, {"tolerance", tolerance}};
  const auto v = evaluate(x, cert.lyapunov);
  const double input_term = cert.input_gain * input_norm;
  for (std::size_t k = start_k; k + 1 < x.length(); ++k) {
    const double window_max = *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(k - cert.window),
                                                v.begin() + static_cast<std::ptrdiff_t>(k + 1));
    const double rhs = cert.kappa * window_max + input_term;
    record(r, k + 1, rhs - v[k + 1], tolerance);
  }
  return r;
}

CheckReport check_lyapunov_sandwich(const StateSeries& x, const RazumikhinCertificate& cert,
                                    double tolerance) {
  validate(cert);
  CheckReport r;
  r.check = "lyapunov_sandwich";
  r.worst_slack = std::numeric_limits<double>::infinity();
  r.params = {{"lower_slope", cert.lower_slope}, {"upper_slope", cert.upper_slope}};
  const auto v = evaluate(x, cert.lyapunov);
  for (std::size_t k = 0; k < x.length(); ++k) {
    const double norm = sup_norm(x.at(k));
    record(r, k, std::min(v[k] - cert.lower_slope * norm, cert.upper_slope * norm - v[k]), tolerance);
  }
  return r;
}

void validate(const ExpIssEnvelope& env) {
  if (!(env.overshoot >= 1.0)) throw std::invalid_argument("overshoot p must be >= 1");
  if (!(env.rate >= 0.0 && env.rate < 1.0)) throw std::invalid_argument("rate must lie in [0, 1)");
  if (!(env.input_gain >= 0.0)) throw std::invalid_argument("input gain must be nonnegative");
}

EnvelopeReport check_expiss_envelope(const StateSeries& x, double input_norm,
                                     const ExpIssEnvelope& env, const EnvelopeWindow& w,
                                     double tolerance) {
  validate(env);
  if (w.initial_end < w.initial_begin || w.initial_end >= x.length())
    throw std::invalid_argument("initial window outside the trace");
  if (w.start_k < w.time_origin) throw std::invalid_argument("start_k precedes the time origin");

  EnvelopeReport out;
  for (std::size_t k = w.initial_begin; k <= w.initial_end; ++k)
    out.initial_norm = std::max(out.initial_norm, sup_norm(x.at(k)));

  CheckReport& r = out.check;
  r.check = "expiss_envelope";
  r.worst_slack = std::numeric_limits<double>::infinity();
  r.params = {{"overshoot", env.overshoot}, {"rate", env.rate}, {"input_gain", env.input_gain},
              {"input_norm", input_norm}, {"initial_norm", out.initial_norm},
              {"start_k", w.start_k}, {"time_origin", w.time_origin}};

  const double input_term = env.input_gain * input_norm;
  double needed = 1.0;
  for (std::size_t k = w.start_k; k < x.length(); ++k) {
    const double decay = std::pow(env.rate, static_cast<double>(k - w.time_origin));
    const double scale = decay * out.initial_norm;
    const double norm = sup_norm(x.at(k));
    record(r, k, env.overshoot * scale + input_term - norm, tolerance);
    const double excess = norm - input_term;
    if (excess > 0.0) {
      needed = scale > 0.0 ? std::max(needed, excess / scale)
                           : std::numeric_limits<double>::infinity();
    }
  }
  out.tightest_overshoot = needed;
  return out;
}

GainTable per_subsystem_gains(const StateSeries& x, std::span<const std::size_t> partition,
                              std::size_t window, double input_norm,
                              std::span<const double> input_slopes, std::size_t start_k,
                              const PartnerFunction& partner) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t s : partition) offsets.push_back(offsets.back() + s);
  if (offsets.back() != x.dim()) throw std::invalid_argument("partition does not match state dimension");
  const std::size_t blocks = partition.size();
  if (input_slopes.size() != blocks) throw std::invalid_argument("one input slope per subsystem required");
  if (start_k < window) throw std::invalid_argument("start_k must be >= window");

  // V_i per (time, subsystem).
  const std::size_t len = x.length();
  std::vector<double> v(len * blocks);
  std::vector<double> vmax(len);
  for (std::size_t k = 0; k < len; ++k) {
    auto row = x.at(k);
    double m = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      v[k * blocks + b] = sup_norm(row.subspan(offsets[b], partition[b]));
      m = std::max(m, v[k * blocks + b]);
    }
    vmax[k] = m;
  }

  GainTable t;
  t.window_slopes.assign(blocks, 0.0);
  for (std::size_t k = start_k; k + 1 < len; ++k) {
    ++t.steps;
    const double window_max = *std::max_element(vmax.begin() + static_cast<std::ptrdiff_t>(k - window),
                                                vmax.begin() + static_cast<std::ptrdiff_t>(k + 1));
    for (std::size_t b = 0; b < blocks; ++b) {
      const double excess = std::max(0.0, v[(k + 1) * blocks + b] - input_slopes[b] * input_norm);
      if (window_max == 0.0) {
        if (excess > 0.0) t.window_slopes[b] = std::numeric_limits<double>::infinity();
        ++t.degenerate_skipped;
      } else {
        t.window_slopes[b] = std::max(t.window_slopes[b], excess / window_max);
      }
      if (!partner) continue;
      auto p = partner(b, k);
      if (!p) continue;
      const double base = v[p->index * blocks + p->subsystem];
      auto& slot = t.pair_slopes[{b, p->subsystem}];
      if (base == 0.0) {
        if (excess > 0.0) slot = std::numeric_limits<double>::infinity();
        ++t.degenerate_skipped;
      } else {
        slot = std::max(slot, excess / base);
      }
    }
  }
  return t;
}

}  // namespace mincon
