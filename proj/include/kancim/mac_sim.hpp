#ifndef KANCIM_MAC_SIM_HPP_
#define KANCIM_MAC_SIM_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kancim/crossbar.hpp"
#include "kancim/encoder.hpp"

namespace kancim {

// Weights occupy one column group of 8 single-bit slices, MSB first.
inline constexpr int kWeightSliceBits = 8;

struct ColumnReadout {
  long long ideal_units = 0;    // digital dot product for this bit slice
  double measured_units = 0.0;  // integrated analog charge, unit-charge steps
  double charge_coulombs = 0.0;
  long long decoded_units = 0;  // post-ADC, scaled back to unit-charge steps
  bool saturated = false;

  long long error_units() const { return decoded_units - ideal_units; }
};

struct MacResult {
  std::vector<ColumnReadout> columns;  // kWeightSliceBits entries, MSB first
  long long adc_step_units = 1;        // unit-charge steps per ADC code
  long long ideal_sum = 0;             // shift-add of per-slice ideal units
  long long decoded_sum = 0;           // shift-add of per-slice decoded units
  double charge_coulombs = 0.0;
  bool saturated = false;

  long long error() const { return decoded_sum - ideal_sum; }
};

/// One multiply-accumulate cycle of a column group against every mapped
/// row. weight_mags holds 8-bit magnitudes, one per logical row; each is
/// programmed as 8 single-bit cells across the slice columns. input_codes
/// holds the 2N-bit word-line codes. row_to_physical places logical row i
/// at that physical row (empty means identity); unmapped physical rows
/// load the ladder as off cells parked at the clamp voltage.
///
/// Non-idealities, all individually zeroable: bit-line IR drop
/// (cfg.wire_r), additive gaussian word-line voltage noise per time slice
/// (enc.voltage_noise_sigma, keyed by trial_seed/row/slice and shared by
/// every column), and static multiplicative conductance variation
/// (cfg.variation_sigma, keyed by cfg.seed/column/row, clamped at three
/// sigma). The ADC is an ideal linear quantizer whose step is the
/// smallest power of two covering the largest ideal column charge;
/// saturation sets a flag instead of throwing.
MacResult simulate_mac(const CrossbarConfig& cfg, const EncoderConfig& enc,
                       const Eigen::VectorXi& weight_mags,
                       const Eigen::VectorXi& input_codes,
                       const std::vector<int>& row_to_physical,
                       std::uint64_t trial_seed);

// Sub-seed tags; exposed so reference implementations can reproduce the
// exact draws. Noise: derive_seed(trial_seed, kNoiseTag, physical_row,
// slice_index). Variation: derive_seed(cfg.seed, kVariationTag,
// slice_column, physical_row).
inline constexpr std::uint64_t kNoiseTag = 0x4e01;
inline constexpr std::uint64_t kVariationTag = 0x5a12;

// Conductance variation factor for the device at (column, physical row):
// 1 + clamp(sigma * z, +-3 sigma) with z a keyed standard normal.
double variation_factor(double sigma, std::uint64_t root, int column,
                        int physical_row);

}  // namespace kancim

#endif
