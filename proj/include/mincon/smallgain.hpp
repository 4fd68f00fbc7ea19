#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mincon/graph.hpp"

namespace mincon {

using SlopeMatrix = std::vector<std::vector<double>>;

// Linear gains: slopes[i][j] is the slope of the gain from subsystem j into
// subsystem i, 0 meaning no coupling.
struct GainSystem {
  std::size_t size = 0;
  SlopeMatrix slopes;
  std::vector<double> input_slopes;
};

// Throws std::invalid_argument on a shape mismatch or a negative or
// non-finite entry.
void validate(const GainSystem& gs);

struct SmallGainCertificate {
  std::vector<double> sigma;
  double kappa = 0.0;
  double max_cycle_mean = 0.0;
};

struct InfeasibleCycle {
  std::vector<std::size_t> cycle;  // i_1 -> i_2 -> ... -> i_1, first node not repeated
  double product = 0.0;
};

using CertifyResult = std::variant<SmallGainCertificate, InfeasibleCycle>;

// Largest geometric mean of the slopes along any directed cycle; 0 when the
// coupling graph is acyclic.
double max_cycle_mean(const SlopeMatrix& slopes);

// Log-slope tolerance for treating a cycle product as reaching 1.
inline constexpr double kCycleTolerance = 1e-12;

CertifyResult certify(const GainSystem& gs);

// max_{i,j} sigma_i^-1 slopes[i][j] sigma_j.
double achieved_contraction(const SlopeMatrix& slopes, std::span<const double> sigma);

// Literal reading over open sequences: every product along a walk of 1 to
// size edges is below 1.
bool strict_path_condition(const SlopeMatrix& slopes);

// V = max_i sigma_i^-1 V_i.
double composite_lyapunov(const SmallGainCertificate& cert, std::span<const double> subsystem_values);

struct ConsensusGains {
  GainSystem system;
  SmallGainCertificate certificate;
};

// One subsystem per node. Over a window of M rounds a non-source node is
// driven only by nodes within D hops, each with slope zeta; the input slope
// is D. Certified with sigma = 1 and kappa = zeta.
ConsensusGains consensus_gain_system(const WeightedGraph& g, const StructuralConstants& sc);

GainSystem gain_system_from_json(const nlohmann::json& j);
nlohmann::json gain_system_to_json(const GainSystem& gs);
nlohmann::json certify_result_to_json(const CertifyResult& r);

}  // namespace mincon
