#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "mincon/delay_core.hpp"
#include "mincon/graph.hpp"

namespace mincon {

struct BoundParameters {
  double zeta = 0.5;
  int diameter = 1;
  int delta = 0;
  int max_delay = 0;
  int window = 0;           // M = D (delta + tau_bar) + D - 1
  double rate = 0.5;        // zeta^(1 / (M + 1))
  double overshoot = 1.0;   // zeta^(-M / (M + 1))
  double input_gain = 0.0;  // rate (D - 1) + D / (1 - zeta)
  double input_norm_bound = 0.0;

  nlohmann::json to_json() const;
};

// Throws std::invalid_argument unless 0 < zeta < 1, D >= 1 and delta,
// max_delay, input_norm >= 0.
BoundParameters bound_params(double zeta, int diameter, int delta, int max_delay, double input_norm);
BoundParameters bound_params(const StructuralConstants& sc, int delta, int max_delay, double input_norm);
BoundParameters bound_params_from_json(const nlohmann::json& j);

struct BoundSeries {
  std::vector<double> values;  // b(k) for every k of the trace
  double initial_norm = 0.0;   // max |x(l)|_inf over l in [0, M]
  std::size_t first_asserted = 0;  // M + 1
};

// For k >= M + 1, b(k) = rate^k overshoot |xi| + input_gain input_norm_bound;
// earlier entries repeat b(M + 1). Requires errors.length() > M + 1.
BoundSeries bound_series(const BoundParameters& bp, const StateSeries& errors);

struct BoundReport {
  CheckReport check;
  double initial_norm = 0.0;
  double min_ratio_gap = 0.0;  // min over k of 1 - |x(k)| / b(k), b > 0
  double final_bound = 0.0;
  double final_error = 0.0;
  double violating_error = 0.0;
  double violating_bound = 0.0;
};

// |x(k)|_inf <= b(k) for every k >= M + 1.
BoundReport verify_bound(const StateSeries& errors, const BoundParameters& bp, double tolerance = 0.0);

// |x(k+1)|_inf <= zeta max_{theta in [k - M, k - D + 1]} |x(theta)|_inf + D ||u||
// for every k >= M: the window contraction behind the Lyapunov inequality.
CheckReport check_window_contraction(const StateSeries& errors, const BoundParameters& bp,
                                     double input_norm, double tolerance = 0.0);

// Window inequality with kappa = zeta, window M and input gain D.
RazumikhinCertificate window_certificate(const BoundParameters& bp);
// Envelope with p = overshoot, rho = rate and gain = input_gain.
ExpIssEnvelope envelope(const BoundParameters& bp);

}  // namespace mincon
