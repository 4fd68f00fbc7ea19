#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mincon {

// Row-major sequence of equally sized state vectors.
class StateSeries {
 public:
  StateSeries() = default;
  explicit StateSeries(std::size_t dim) : dim_(dim) {}
  StateSeries(std::size_t dim, std::size_t length, double fill = 0.0)
      : dim_(dim), data_(dim * length, fill) {}

  std::size_t dim() const { return dim_; }
  std::size_t length() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> at(std::size_t k) const { return {data_.data() + k * dim_, dim_}; }
  std::span<double> at(std::size_t k) { return {data_.data() + k * dim_, dim_}; }
  double& operator()(std::size_t k, std::size_t i) { return data_[k * dim_ + i]; }
  double operator()(std::size_t k, std::size_t i) const { return data_[k * dim_ + i]; }

  void push_back(std::span<const double> x);
  void reserve(std::size_t length) { data_.reserve(length * dim_); }

  friend bool operator==(const StateSeries&, const StateSeries&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

double sup_norm(std::span<const double> x);

// V applied to a full state vector.
using StateFunction = std::function<double(std::span<const double>)>;

// x(k+1) = G(x_[k-tau, k], u(k-d)). The window passed to the transition is
// ordered oldest first: window[0] = x(k - tau), window[tau] = x(k).
struct DelaySystemSpec {
  std::size_t state_dim = 1;
  std::vector<std::size_t> partition;  // subsystem sizes; empty means one block
  int max_state_delay = 0;
  int input_delay = 0;
  std::size_t input_dim = 0;
  std::function<std::vector<double>(std::span<const std::span<const double>> window,
                                    std::span<const double> input)>
      transition;

  std::vector<std::size_t> blocks() const;
};

// Throws std::invalid_argument when the spec is malformed or G(0, 0) != 0.
void validate(const DelaySystemSpec& spec);

// Simulates `steps` transitions from an initial window of max_state_delay + 1
// states (oldest first). Inputs before time zero are taken as zero. The result
// holds x(-tau), ..., x(steps); x(k) lives at index k + tau.
StateSeries simulate(const DelaySystemSpec& spec, const StateSeries& initial_window,
                     const std::function<std::vector<double>(int)>& input, int steps);

struct CheckReport {
  std::string check;
  bool pass = true;
  double worst_slack = 0.0;
  std::optional<std::size_t> first_violation_k;
  std::size_t checked = 0;
  std::size_t violations = 0;
  nlohmann::json params = nlohmann::json::object();

  nlohmann::json to_json() const;
};

// V(x(k+1)) <= max_{theta in [k-M, k]} kappa V(x(theta)) + lambda_u ||u||.
struct RazumikhinCertificate {
  std::size_t window = 0;  // M
  double kappa = 0.0;
  double input_gain = 0.0;
  StateFunction lyapunov;  // sup-norm when empty
  double lower_slope = 1.0;
  double upper_slope = 1.0;
};

void validate(const RazumikhinCertificate& cert);

// Checks every k in [start_k, length - 2]; start_k must be >= M.
CheckReport check_razumikhin(const StateSeries& x, double input_norm,
                             const RazumikhinCertificate& cert, std::size_t start_k,
                             double tolerance = 0.0);

// lower * |x|_inf <= V(x) <= upper * |x|_inf on every state of the series.
CheckReport check_lyapunov_sandwich(const StateSeries& x, const RazumikhinCertificate& cert,
                                    double tolerance = 0.0);

// ||x(k)|| <= p rho^(k - origin) ||xi|| + gain ||u||.
struct ExpIssEnvelope {
  double overshoot = 1.0;
  double rate = 0.0;
  double input_gain = 0.0;
};

void validate(const ExpIssEnvelope& env);

struct EnvelopeWindow {
  std::size_t initial_begin = 0;  // xi covers [initial_begin, initial_end]
  std::size_t initial_end = 0;
  std::size_t start_k = 0;        // first asserted index
  std::size_t time_origin = 0;    // index where the exponent is zero
};

struct EnvelopeReport {
  CheckReport check;
  double initial_norm = 0.0;
  // Smallest p >= 1 for the given rate and gain; +inf when unattainable.
  double tightest_overshoot = 1.0;
};

EnvelopeReport check_expiss_envelope(const StateSeries& x, double input_norm,
                                     const ExpIssEnvelope& env, const EnvelopeWindow& window,
                                     double tolerance = 0.0);

// For step k -> k+1 of subsystem i, the constraining subsystem and the series
// index of the state it is compared against.
struct GainPartner {
  std::size_t subsystem;
  std::size_t index;
};
using PartnerFunction = std::function<std::optional<GainPartner>(std::size_t subsystem, std::size_t k)>;

struct GainTable {
  // Smallest a with V_i(x_i(k+1)) <= a max_{theta, j} V_j(x_j(theta)) + lambda_iu ||u||.
  std::vector<double> window_slopes;
  // Same against the supplied constraining partner only.
  std::map<std::pair<std::size_t, std::size_t>, double> pair_slopes;
  std::size_t steps = 0;
  std::size_t degenerate_skipped = 0;
};

GainTable per_subsystem_gains(const StateSeries& x, std::span<const std::size_t> partition,
                              std::size_t window, double input_norm,
                              std::span<const double> input_slopes, std::size_t start_k,
                              const PartnerFunction& partner = {});

}  // namespace mincon
