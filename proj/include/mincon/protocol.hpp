#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mincon/delay_core.hpp"
#include "mincon/graph.hpp"
#include "mincon/rng.hpp"

namespace mincon {

using Round = std::int64_t;

// Communication delay tau_ij(k) in {0, ..., max_delay}. The simulator always
// queries with a < b, so both directions of a link see the same delay.
class DelayProcess {
 public:
  virtual ~DelayProcess() = default;
  virtual int delay(NodeId a, NodeId b, Round k) const = 0;
  virtual int max_delay() const = 0;
};

class ConstantDelay final : public DelayProcess {
 public:
  explicit ConstantDelay(int delay);
  int delay(NodeId, NodeId, Round) const override { return delay_; }
  int max_delay() const override { return delay_; }

 private:
  int delay_;
};

// Independent uniform draw on {0, ..., max} per link per round.
class UniformDelay final : public DelayProcess {
 public:
  UniformDelay(std::uint64_t seed, std::uint64_t substream, int max_delay);
  int delay(NodeId a, NodeId b, Round k) const override;
  int max_delay() const override { return max_; }

 private:
  CounterRng rng_;
  int max_;
};

class FunctionDelay final : public DelayProcess {
 public:
  FunctionDelay(std::function<int(NodeId, NodeId, Round)> fn, int max_delay)
      : fn_(std::move(fn)), max_(max_delay) {}
  int delay(NodeId a, NodeId b, Round k) const override { return fn_(a, b, k); }
  int max_delay() const override { return max_; }

 private:
  std::function<int(NodeId, NodeId, Round)> fn_;
  int max_;
};

// Membership of U(k): row k, column i is nonzero when node i updates at k.
// Row 0 is the initial state and carries no updates.
class UpdateTable {
 public:
  UpdateTable(int node_count, Round horizon)
      : n_(static_cast<std::size_t>(node_count)), rows_(static_cast<std::size_t>(horizon) + 1),
        data_(n_ * rows_, 0) {}
  bool updates(NodeId i, Round k) const { return data_[index(i, k)] != 0; }
  void set(NodeId i, Round k, bool value = true) { data_[index(i, k)] = value ? 1 : 0; }
  Round horizon() const { return static_cast<Round>(rows_) - 1; }
  int node_count() const { return static_cast<int>(n_); }

 private:
  std::size_t index(NodeId i, Round k) const {
    return static_cast<std::size_t>(k) * n_ + static_cast<std::size_t>(i);
  }
  std::size_t n_;
  std::size_t rows_;
  std::vector<std::uint8_t> data_;
};

class UpdateSchedule {
 public:
  virtual ~UpdateSchedule() = default;
  // Hard bound delta: every node updates at least once in any delta + 1
  // consecutive rounds starting at round 1 or later.
  virtual int window() const = 0;
  virtual UpdateTable draw(int node_count, Round horizon) const = 0;
};

class SynchronousSchedule final : public UpdateSchedule {
 public:
  int window() const override { return 0; }
  UpdateTable draw(int node_count, Round horizon) const override;
};

// Each node draws its next update gap uniformly from {min_gap, ..., max_gap};
// the first update happens at the first drawn gap. window() == max_gap.
class GapUniformSchedule final : public UpdateSchedule {
 public:
  GapUniformSchedule(std::uint64_t seed, std::uint64_t substream, int min_gap, int max_gap);
  int window() const override { return max_gap_; }
  UpdateTable draw(int node_count, Round horizon) const override;

 private:
  CounterRng rng_;
  int min_gap_;
  int max_gap_;
};

class FunctionSchedule final : public UpdateSchedule {
 public:
  FunctionSchedule(std::function<bool(NodeId, Round)> fn, int window)
      : fn_(std::move(fn)), window_(window) {}
  int window() const override { return window_; }
  UpdateTable draw(int node_count, Round horizon) const override;

 private:
  std::function<bool(NodeId, Round)> fn_;
  int window_;
};

// Perturbed directed weight w_ij(k); may differ from w_ji(k).
class WeightNoise {
 public:
  virtual ~WeightNoise() = default;
  virtual double weight(NodeId i, NodeId j, Round k, double nominal) const = 0;
  // A priori bound on |w_ij(k) - w_ij|.
  virtual double amplitude() const = 0;
};

class ExactWeights final : public WeightNoise {
 public:
  double weight(NodeId, NodeId, Round, double nominal) const override { return nominal; }
  double amplitude() const override { return 0.0; }
};

// Uniform on [w - a, w + a] intersected with (0, w_max], drawn independently
// per directed edge per round.
class UniformNoise final : public WeightNoise {
 public:
  UniformNoise(std::uint64_t seed, std::uint64_t substream, double amplitude, double w_max);
  double weight(NodeId i, NodeId j, Round k, double nominal) const override;
  double amplitude() const override { return amplitude_; }

 private:
  CounterRng rng_;
  double amplitude_;
  double w_max_;
};

class FunctionNoise final : public WeightNoise {
 public:
  FunctionNoise(std::function<double(NodeId, NodeId, Round, double)> fn, double amplitude)
      : fn_(std::move(fn)), amplitude_(amplitude) {}
  double weight(NodeId i, NodeId j, Round k, double nominal) const override {
    return fn_(i, j, k, nominal);
  }
  double amplitude() const override { return amplitude_; }

 private:
  std::function<double(NodeId, NodeId, Round, double)> fn_;
  double amplitude_;
};

struct PerturbationModel {
  std::shared_ptr<const DelayProcess> delays;
  std::shared_ptr<const UpdateSchedule> schedule;
  std::shared_ptr<const WeightNoise> noise;
  double w_max = std::numeric_limits<double>::infinity();

  int max_delay() const { return delays->max_delay(); }
  int window() const { return schedule->window(); }
  double noise_amplitude() const { return noise->amplitude(); }

  // tau_bar = 0, synchronous updates, exact weights.
  static PerturbationModel unperturbed();
};

struct InitialCondition {
  std::vector<double> values;
};

// Throws std::invalid_argument on negative values, nonzero sources, or a
// length mismatch.
void validate(const InitialCondition& init, const WeightedGraph& g);

// Non-sources uniform on [0, d_max / 2], sources at 0.
InitialCondition uniform_half_dmax_initial(const WeightedGraph& g, const StructuralConstants& sc,
                                           std::uint64_t seed, std::uint64_t substream = 0);

// Configuration of a randomized perturbation model and initial state.
struct ModelConfig {
  int max_delay = 2;
  enum class Scheduler { kSynchronous, kGapUniform } scheduler = Scheduler::kGapUniform;
  int gap_min = 1;
  int gap_max = 3;
  enum class Noise { kNone, kUniform } noise = Noise::kUniform;
  double noise_amplitude = 0.01;
  std::optional<double> w_max;  // defaults to max nominal weight + amplitude
  enum class Init { kUniformHalfDmax, kExplicit } init = Init::kUniformHalfDmax;
  std::vector<double> init_values;
  std::uint64_t seed = 1;
  Round horizon = 1000;
};

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& c);

// Builds the processes for one trial; every process uses its own stream of
// (seed, substream).
PerturbationModel make_model(const ModelConfig& c, const WeightedGraph& g,
                             std::uint64_t substream = 0);
InitialCondition make_initial(const ModelConfig& c, const WeightedGraph& g,
                              const StructuralConstants& sc, std::uint64_t substream = 0);

struct TrajectoryTrace {
  int node_count = 0;
  Round horizon = 0;
  int max_delay = 0;
  int window = 0;

  StateSeries estimates;  // d_hat(k), k in [0, K]
  StateSeries errors;     // x_hat(k); filled by to_error_coordinates

  // Per (k, i), row-major with n entries per round:
  std::vector<std::uint8_t> updated;      // i in U(k)
  // Neighbor whose delayed estimate defines d_hat_i(k); -1 for sources and
  // nodes that have not updated yet.
  std::vector<NodeId> constraining;
  // tau_hat_ij(k - 1) for that neighbor, so d_hat_i(k) reads time
  // k - 1 - tau_hat. -1 when there is no constraining neighbor.
  std::vector<std::int32_t> effective_delay;
  // q_i(k - 1): rounds since the last update; -1 before the first update.
  std::vector<std::int32_t> update_age;
  // w_ij(t) - w_ij for the weight read at time t = k - 1 - tau_hat.
  std::vector<double> used_input;

  // max over directed edges of |w_ij(k) - w_ij| for each k in [0, K].
  std::vector<double> input_norm_by_round;
  double input_sup_norm = 0.0;       // realized ||u_hat||_inf
  double max_recursion_residual = 0.0;

  std::size_t at(Round k, NodeId i) const {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(node_count) +
           static_cast<std::size_t>(i);
  }
  // Time index read by the last update defining d_hat_i(k), if any.
  std::optional<Round> read_time(Round k, NodeId i) const;
  bool has_errors() const { return !errors.empty(); }
};

// d_hat_i(k+1) = min_j (d_hat_j(k) + w_ij) for non-sources, 0 on sources.
std::vector<double> step_nominal(const WeightedGraph& g, std::span<const double> estimates);

// Runs the delayed, asynchronous, noisy protocol for `horizon` rounds.
// Reads before time zero see the round-zero estimates and weights. Ties in
// the min go to the lowest neighbor index. Throws std::invalid_argument if a
// perturbed weight leaves (0, w_max], a delay leaves {0, ..., max_delay}, or
// the schedule breaks its window bound.
TrajectoryTrace run_perturbed(const WeightedGraph& g, const PerturbationModel& pm,
                              const InitialCondition& init, Round horizon);

// Fills errors and the realized input norm, then re-derives every recorded
// update through the error-coordinate recursion. Throws std::logic_error when
// the recorded minimizer does not reproduce the error state.
void to_error_coordinates(const WeightedGraph& g, TrajectoryTrace& trace,
                          const StructuralConstants& sc);

// Error-coordinate composite map on a history window of delta + tau_bar + 1
// states (oldest first). `inputs` and `delays` are indexed by directed arc;
// delays are effective delays in [0, window - 1]. Nodes flagged in
// `never_updated` keep their oldest window value.
std::vector<double> composite_map(const WeightedGraph& g, const StructuralConstants& sc,
                                  const StateSeries& window, std::span<const double> inputs,
                                  std::span<const int> delays,
                                  std::span<const std::uint8_t> never_updated = {});

struct KBoundednessReport {
  CheckReport check;
  double max_ratio = 0.0;
  std::size_t samples = 0;
  std::optional<std::size_t> violating_sample;
};

// Random (history, input) pairs through composite_map, asserting
// |G(xi, mu)|_inf <= |xi|_inf + |mu|_inf.
KBoundednessReport check_k_boundedness(const WeightedGraph& g, const StructuralConstants& sc,
                                       int max_delay, int window, std::size_t samples,
                                       std::uint64_t seed, double tolerance = 1e-12);

struct Lemma1Report {
  // |x_i(k+1)| <= |x_j(k - tau_hat_ij(k))| + ||u||, j true constraining when
  // x_i(k+1) >= 0 and the recorded minimizer otherwise.
  CheckReport step;
  // x_i(k+1) < 0 with a non-constraining minimizer: the zeta-scaled bound.
  CheckReport zeta_branch;
  // Recorded minimizer used for every step regardless of sign (diagnostic).
  CheckReport minimizer_only;
  std::size_t nonnegative_steps = 0;
  std::size_t negative_steps = 0;
};

// Checks every non-source update for k >= tau_bar + delta. The delay process
// is queried again to locate the reads of true constraining neighbors.
Lemma1Report check_lemma1(const WeightedGraph& g, const StructuralConstants& sc,
                          const TrajectoryTrace& trace, const PerturbationModel& pm,
                          double tolerance = 1e-12);

// k,node,estimate,error,updated,constraining_node,effective_delay
void write_trace_csv(const TrajectoryTrace& trace, std::ostream& out);
// Restores estimates, errors, update flags, constraining nodes and effective
// delays. Throws std::invalid_argument on a schema mismatch.
TrajectoryTrace read_trace_csv(std::istream& in);

}  // namespace mincon
