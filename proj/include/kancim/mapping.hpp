#ifndef KANCIM_MAPPING_HPP_
#define KANCIM_MAPPING_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kancim/crossbar.hpp"
#include "kancim/encoder.hpp"
#include "kancim/quant.hpp"
#include "kancim/spline.hpp"

namespace kancim {

/// Per-basis activation statistics from one pass over an input channel:
/// how often each basis fires, its mean value when active, and the
/// variance of that value. Never-active bases report (0, 0, 0).
struct BasisStats {
  Eigen::VectorXi cnt;
  Eigen::VectorXd p;    // cnt / samples
  Eigen::VectorXd mu;   // mean active value
  Eigen::VectorXd var;  // population variance of the active values
  long long samples = 0;
};

// Inputs are clamped to the spline domain first, matching the forward
// pass. A basis is active when its value exceeds active_threshold.
// Per-basis sums are accumulated over sorted values, so permuting the
// samples yields bit-identical statistics.
BasisStats profile_stats(const Eigen::VectorXd& inputs,
                         const BSplineSpec& spec,
                         double active_threshold = 0.0);

struct ScoreParams {
  double alpha = 0.5;
  double beta = 0.5;  // alpha + beta must be 1
  double epsilon = 1e-6;
  double active_threshold = 0.0;

  void validate() const;
};

struct CriticalityScore {
  Eigen::VectorXd stability;     // 1 / (1 + sigma/(mu + eps)), in (0, 1]
  Eigen::VectorXd contribution;  // p * mu * quantized magnitude
  Eigen::VectorXd criticality;   // alpha * J + beta * S * J
};

// quant_magnitude holds |c'|_Q per basis; fractional values are allowed
// so callers can average magnitudes across output channels sharing the
// rows.
CriticalityScore score_coefficients(const BasisStats& stats,
                                    const Eigen::VectorXd& quant_magnitude,
                                    const ScoreParams& params);

/// Placement of one channel's coefficients onto physical rows, plus the
/// scores that justified it.
struct MappingPlan {
  std::vector<int> basis_to_row;
  Eigen::VectorXd scores;

  void validate(int rows) const;
};

// Bit-line geometry: row 0 sits at the clamp, so nearest-to-farthest is
// just the index order.
std::vector<int> nearest_first_rows(int rows);

// Highest criticality takes the nearest row; ties go to the lower basis
// index. Throws when there are more coefficients than rows.
MappingPlan assign_rows(const Eigen::VectorXd& criticality,
                        const std::vector<int>& row_order);

// Index-order placement spread evenly across the whole array: the
// mapping a layout tool would produce with no activation information.
MappingPlan uniform_plan(int n_basis, int rows);

// Adversarial counterpart of assign_rows: highest criticality takes the
// farthest row.
MappingPlan reversed_plan(const Eigen::VectorXd& criticality,
                          const std::vector<int>& row_order);

void save_mapping_plan(const MappingPlan& plan, const std::string& path);
MappingPlan load_mapping_plan(const std::string& path);

/// Analog evaluation of one input channel's column group under a plan:
/// word lines carry the quantized basis values, cells the bit-sliced
/// coefficient magnitudes (positive and negative column groups read
/// differentially).
struct PlanMetrics {
  double mean_decoded_error = 0.0;  // |decoded - digital| in code units
  double mean_float_error = 0.0;    // |analog - float reference|, dequantized
};

struct MappingComparison {
  PlanMetrics sam;
  PlanMetrics uniform;
  PlanMetrics reversed;
  MappingPlan sam_plan;
  // Degradation ratio against the float reference: uniform float error
  // over sam float error; 1 when both vanish (zero wire resistance).
  double improvement_factor = 1.0;
};

struct MappingEvalConfig {
  CrossbarConfig crossbar;
  EncoderConfig encoder;
  int value_bits = 8;  // word-line code resolution for basis values
  ScoreParams score;
};

MappingComparison evaluate_mapping(const KanLayer& layer, int channel,
                                   const QuantizedCoeffs& coeffs,
                                   const Eigen::VectorXd& train_inputs,
                                   const Eigen::VectorXd& eval_inputs,
                                   const MappingEvalConfig& cfg);

}  // namespace kancim

#endif
