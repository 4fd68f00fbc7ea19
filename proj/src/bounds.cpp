#include "mincon/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mincon {

nlohmann::json BoundParameters::to_json() const {
  return {{"zeta", zeta},     {"diameter", diameter},   {"delta", delta},
          {"max_delay", max_delay}, {"window", window}, {"rate", rate},
          {"overshoot", overshoot}, {"input_gain", input_gain},
          {"input_norm_bound", input_norm_bound}};
}

BoundParameters bound_params(double zeta, int diameter, int delta, int max_delay, double input_norm) {
  if (!(zeta > 0.0 && zeta < 1.0))
    throw std::invalid_argument("zeta must lie in (0, 1), got " + std::to_string(zeta));
  if (diameter < 1) throw std::invalid_argument("effective diameter must be >= 1");
  if (delta < 0 || max_delay < 0) throw std::invalid_argument("delta and max_delay must be >= 0");
  if (!(input_norm >= 0.0) || !std::isfinite(input_norm))
    throw std::invalid_argument("input norm must be finite and >= 0");
  BoundParameters bp;
  bp.zeta = zeta;
  bp.diameter = diameter;
  bp.delta = delta;
  bp.max_delay = max_delay;
  bp.window = diameter * (delta + max_delay) + diameter - 1;
  const double m1 = static_cast<double>(bp.window) + 1.0;
  bp.rate = std::pow(zeta, 1.0 / m1);
  bp.overshoot = std::pow(zeta, -static_cast<double>(bp.window) / m1);
  bp.input_gain = bp.rate * (diameter - 1) + diameter / (1.0 - zeta);
  bp.input_norm_bound = input_norm;
  return bp;
}

BoundParameters bound_params(const StructuralConstants& sc, int delta, int max_delay, double input_norm) {
  return bound_params(sc.zeta, sc.effective_diameter, delta, max_delay, input_norm);
}

BoundParameters bound_params_from_json(const nlohmann::json& j) {
  try {
    return bound_params(j.at("zeta").get<double>(), j.at("diameter").get<int>(), j.at("delta").get<int>(),
                        j.at("max_delay").get<int>(), j.at("input_norm_bound").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed bound parameters: ") + e.what());
  }
}

BoundSeries bound_series(const BoundParameters& bp, const StateSeries& errors) {
  const auto m = static_cast<std::size_t>(bp.window);
  if (errors.length() <= m + 1)
    throw std::invalid_argument("trace must extend past k = M + 1 = " + std::to_string(m + 1));
  BoundSeries s;
  s.first_asserted = m + 1;
  for (std::size_t l = 0; l <= m; ++l) s.initial_norm = std::max(s.initial_norm, sup_norm(errors.at(l)));
  const double floor = bp.input_gain * bp.input_norm_bound;
  s.values.resize(errors.length());
  for (std::size_t k = m + 1; k < errors.length(); ++k)
    s.values[k] = std::pow(bp.rate, static_cast<double>(k)) * bp.overshoot * s.initial_norm + floor;
  std::fill(s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(m + 1), s.values[m + 1]);
  return s;
}

BoundReport verify_bound(const StateSeries& errors, const BoundParameters& bp, double tolerance) {
  const BoundSeries s = bound_series(bp, errors);
  BoundReport r;
  r.check.check = "bound";
  r.check.worst_slack = std::numeric_limits<double>::infinity();
  r.check.params = bp.to_json();
  r.check.params["tolerance"] = tolerance;
  r.initial_norm = s.initial_norm;
  r.min_ratio_gap = 1.0;
  for (std::size_t k = s.first_asserted; k < errors.length(); ++k) {
    const double e = sup_norm(errors.at(k));
    const double slack = s.values[k] - e;
    ++r.check.checked;
    r.check.worst_slack = std::min(r.check.worst_slack, slack);
    if (s.values[k] > 0.0) r.min_ratio_gap = std::min(r.min_ratio_gap, 1.0 - e / s.values[k]);
    if (slack < -tolerance) {
      ++r.check.violations;
      if (r.check.pass) {
        r.check.first_violation_k = k;
        r.violating_error = e;
        r.violating_bound = s.values[k];
      }
      r.check.pass = false;
    }
  }
  r.final_bound = s.values.back();
  r.final_error = sup_norm(errors.at(errors.length() - 1));
  return r;
}

CheckReport check_window_contraction(const StateSeries& errors, const BoundParameters& bp,
                                     double input_norm, double tolerance) {
  CheckReport r;
  r.check = "window_contraction";
  r.worst_slack = std::numeric_limits<double>::infinity();
  r.params = {{"zeta", bp.zeta}, {"window", bp.window}, {"lag", bp.diameter - 1},
              {"input_gain", bp.diameter}, {"input_norm", input_norm}, {"tolerance", tolerance}};
  const auto m = static_cast<std::size_t>(bp.window);
  const auto lag = static_cast<std::size_t>(bp.diameter - 1);
  std::vector<double> norms(errors.length());
  for (std::size_t k = 0; k < norms.size(); ++k) norms[k] = sup_norm(errors.at(k));
  for (std::size_t k = m; k + 1 < norms.size(); ++k) {
    const double past = *std::max_element(norms.begin() + static_cast<std::ptrdiff_t>(k - m),
                                          norms.begin() + static_cast<std::ptrdiff_t>(k - lag + 1));
    const double slack = bp.zeta * past + bp.diameter * input_norm - norms[k + 1];
    ++r.checked;
    r.worst_slack = std::min(r.worst_slack, slack);
    if (slack < -tolerance) {
      ++r.violations;
      if (r.pass) r.first_violation_k = k + 1;
      r.pass = false;
    }
  }
  return r;
}

RazumikhinCertificate window_certificate(const BoundParameters& bp) {
  RazumikhinCertificate c;
  c.window = static_cast<std::size_t>(bp.window);
  c.kappa = bp.zeta;
  c.input_gain = static_cast<double>(bp.diameter);
  return c;
}

ExpIssEnvelope envelope(const BoundParameters& bp) {
  return {bp.overshoot, bp.rate, bp.input_gain};
}

}  // namespace mincon
