#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fiolab/bounds.hpp"
#include "fiolab/fit.hpp"
#include "fiolab/oscint.hpp"
#include "fiolab/symbols.hpp"

namespace fiolab {

/// splitmix64 step; seeds the per-slot random streams.
std::uint64_t splitmix64(std::uint64_t& state);
/// Seed of stream (a, b) derived from a base seed; independent of evaluation order.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

enum class NormMethod { power_iteration, test_bank };
std::string method_name(NormMethod method);

struct NormEstimate {
  /// Lower estimate of ||T||_{L^q -> L^r}.
  double value = 0.0;
  NormMethod method = NormMethod::test_bank;
  int iterations = 0;
  bool converged = false;
  std::size_t probes = 0;
  std::string best_probe;
};

struct NormOptions {
  int bank_size = 16;
  std::uint64_t seed = 1;
  int max_iterations = 50;
  double relative_increment = 1e-6;
};

/// Power iteration on T* T for (q, r) = (2, 2); otherwise the max of
/// ||T f||_r / ||f||_q over Gaussians, modulated Gaussians, wave packets and
/// bank_size seeded random band-limited fields.
NormEstimate estimate_operator_norm(const FioOperator& op, double q, double r, const NormOptions& options = {});
NormEstimate estimate_operator_norm(const OperatorSpec& spec, double q, double r, const NormOptions& options = {});

/// Probe functions of the test bank, in bank order (deterministic for a seed).
std::vector<std::pair<std::string, SampledField>> test_bank(const UniformGrid& grid, int bank_size, std::uint64_t seed);

/// a Psi_j (x-independent Psi_j leaves the claimed class unchanged).
AmplitudeDescriptor dyadic_piece(const AmplitudeDescriptor& a, int j);

struct SweepOptions {
  int j_min = 2;
  int j_max = 6;
  NormOptions norm;
  double tolerance = 0.25;
  /// Spatial exponent of the class; unset uses the amplitude's claim.
  std::optional<double> p;
};

struct NormSweepRecord {
  std::vector<int> levels;
  std::vector<double> per_level_norm;
  NormMethod method = NormMethod::test_bank;
  LineFit fit;
  double sigma = 0.0;
  /// m - threshold with the threshold of the matching linear result.
  double prediction = 0.0;
  std::string prediction_source;
  double tolerance = 0.25;
  double q = 2.0;
  double r = 2.0;
  std::uint64_t seed = 1;
  bool pass = false;
};

/// ||T_{a_j}|| for j in [j_min, j_max], slope of log2 norm against j, and the
/// one-sided comparison sigma <= prediction + tolerance.
NormSweepRecord dyadic_norm_sweep(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, const UniformGrid& grid,
                                  double q, double r, const SweepOptions& options = {});

/// Growth exponent of ||T_{a_j}|| predicted from the order and the threshold.
double predicted_slope(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, double p, double q,
                       std::string* source = nullptr);

struct ExperimentConfig {
  /// Built-in amplitude name, or an expression when amplitude_expression is set.
  std::string amplitude = "one";
  std::string amplitude_expression;
  /// Claimed class of an expression amplitude.
  ClassTag claimed = ClassTag::hormander(0.0, 1.0, 0.0);
  std::string phase = "linear_phase";
  std::string phase_expression;
  int dim = 1;
  int points = 1024;
  double halfwidth = 8.0;
  std::string scenario = "fio";
  double q = 2.0;
  /// Unset: from 1/r = 1/p + 1/q.
  std::optional<double> r;
  /// Unset: the amplitude's spatial exponent.
  std::optional<double> p;
  SweepOptions sweep;
  bool check_partition = true;
  bool check_phase = true;
};

struct ExperimentReport {
  ExperimentConfig config;
  ThresholdReport thresholds;
  NormSweepRecord sweep;
  /// max |Psi_0 + sum Psi_j - 1| over the frequency grid, when run.
  std::optional<double> partition_error;
  std::optional<PhaseReport> phase;
  std::string verdict;
};

/// symbols -> dyadic -> bounds -> sweep. Errors carry the stage name as prefix.
ExperimentReport boundedness_experiment(const ExperimentConfig& config);

/// "j,norm" rows.
void write_sweep_csv(std::ostream& out, const NormSweepRecord& record);

}  // namespace fiolab
