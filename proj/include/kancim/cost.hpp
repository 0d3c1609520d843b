#ifndef KANCIM_COST_HPP_
#define KANCIM_COST_HPP_

#include <optional>
#include <string>
#include <vector>

#include "kancim/crossbar.hpp"
#include "kancim/encoder.hpp"
#include "kancim/mapping.hpp"
#include "kancim/resources.hpp"
#include "kancim/spline.hpp"

namespace kancim {

// Per-primitive unit costs. Area in um^2, energy in pJ, time in seconds;
// only ratios and trends are meaningful, the illustrative defaults are
// not calibrated to any process node. Decoder area follows the
// output-line count (2^bits per decoder), ADC area follows the level
// count (2^adc_bits) while ADC energy follows the bit count per
// conversion, SAR style.
struct TechParams {
  double area_per_lut_bit = 0.3;
  double energy_per_lut_bit = 0.02;
  double area_per_mux_way = 0.8;
  double energy_per_mux_way = 0.005;
  double area_per_decoder_line = 0.6;
  double energy_per_decoder_line = 0.01;
  double area_per_dac_level = 25.0;
  double energy_per_dac_level = 0.5;
  double area_per_delay_stage = 12.0;
  double energy_per_delay_stage = 0.2;
  double area_per_cell = 0.05;
  double energy_per_cell = 0.01;
  double area_per_adc_level = 1.5;
  double energy_per_adc_bit = 0.8;
  double clock_period_s = 1e-9;

  static TechParams illustrative() { return TechParams{}; }
  void validate() const;  // all >= 0, clock period > 0
};

// Text format, one "key value" pair per line, '#' comments. The first
// non-comment line must be the version header "kancim-tech v1". Every
// key is required; a missing one raises ConfigError naming it.
TechParams load_tech_params(const std::string& path);
void save_tech_params(const TechParams& tech, const std::string& path);

struct BlockCost {
  double area = 0.0;     // um^2
  double energy = 0.0;   // pJ per inference
  double latency = 0.0;  // seconds per inference
};

struct CostReport {
  BlockCost lut, mux, decoder, input_gen, array, adc, other;
  double area = 0.0;
  double energy = 0.0;
  double latency = 0.0;
  double power = 0.0;  // energy/latency, 0 when latency is 0

  std::vector<std::pair<std::string, const BlockCost*>> blocks() const;
  void finalize();  // recompute totals from the blocks
};

// Mean fraction of basis rows active per sample, for the array energy
// activity factor.
double mean_activity(const BasisStats& stats);

// Helpers shared with the tests: total decoder output lines and total
// mux/demux ways for an inventory.
long long decoder_lines(const std::vector<int>& decoder_bits);
long long switch_ways_total(const std::vector<SwitchSpec>& switches);

// Closed-form roll-up of the full pipeline: quantizer path (decoder, LUT,
// mux) per input channel, one pulse generator per routed basis value,
// bit-sliced differential-free cell count, one ADC per weight-slice
// column. The scheme supplies mode/input_bits/coeff_bits; alignment is
// re-solved per layer for that layer's grid, so mixed-grid models cost
// correctly. Conventional mode prices the per-basis full-range table
// layout. wl_activity in [0,1] overrides the structural activity
// (order+1)/basis_count used for array energy; pass mean_activity() of a
// profiled BasisStats to price a workload. An empty model is a zero
// report.
CostReport estimate(const KanModel& model, const QuantScheme& scheme,
                    const CrossbarConfig& crossbar, const EncoderConfig& enc,
                    const TechParams& tech, double wl_activity = -1.0);

// Unset dimensions never constrain. Set ones use <= semantics: a report
// exactly on budget passes.
struct CostBudget {
  std::optional<double> area;
  std::optional<double> energy;
  std::optional<double> latency;

  void validate() const;  // set values must be positive
};

struct ConstraintResult {
  bool pass = true;
  std::vector<std::string> violations;  // "area", "energy", "latency"
};

ConstraintResult check_constraints(const CostReport& report,
                                   const CostBudget& budget);

}  // namespace kancim

#endif
