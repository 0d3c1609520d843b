#ifndef KANCIM_ENCODER_HPP_
#define KANCIM_ENCODER_HPP_

#include <cstdint>
#include <vector>

namespace kancim {

// Word-line driver transfer function: current out vs gate voltage in.
struct TransferFn {
  enum class Kind { LinearAboveThreshold, SquareLaw };
  Kind kind = Kind::LinearAboveThreshold;
  double v_threshold = 0.3;  // volts
  double gain = 1e-4;        // A/V (linear) or A/V^2 (square law)

  double operator()(double v) const;
  static TransferFn linear(double v_threshold, double gain);
  static TransferFn square_law(double v_threshold, double gain);
};

// DAC levels such that current(level k) = k * unit current. The unit
// current defaults to current(v_max)/(n_levels-1) so the top level sits
// exactly at v_max; passing base_current overrides the unit, and levels
// whose target exceeds current(v_max) raise CalibrationError naming the
// level. Level 0 is the threshold voltage (zero current). Bisection,
// converged to machine precision.
std::vector<double> calibrate_dac(const TransferFn& f, int n_levels,
                                  double v_max, double base_current = 0.0);

enum class EncodeScheme { PureVoltage, PurePwm, Tmdv };

// Tag distinguishing throughput-oriented from accuracy-oriented encoder
// presets; carried into reports and the per-layer assignment, no effect
// on the waveform itself.
enum class EncoderMode { Performance, Accuracy };

struct PulseSegment {
  int level = 0;              // DAC level index; current = level * unit
  double voltage = 0.0;       // calibrated level voltage
  long long width_units = 0;  // multiples of the unit pulse width
};

struct PulseTrain {
  std::vector<PulseSegment> segments;
  long long total_width_units() const {
    long long w = 0;
    for (const auto& s : segments) w += s.width_units;
    return w;
  }
};

/// Input codes are 2N-bit integers. Tmdv sends two pulses: the low N bits
/// as a unit-width pulse and the high N bits stretched by 2^N, so charge
/// is linear in the code with only 2^N DAC levels. PureVoltage spends a
/// 2^{2N}-level DAC on a single unit pulse; PurePwm holds one level for
/// `code` unit widths.
struct EncoderConfig {
  EncodeScheme scheme = EncodeScheme::Tmdv;
  int half_bits = 3;  // N in [1, 4]; codes span [0, 2^{2N})
  double unit_pulse_s = 1e-9;
  TransferFn transfer;
  double v_max = 1.0;
  double voltage_noise_sigma = 0.0;
  EncoderMode mode = EncoderMode::Accuracy;
  std::vector<double> dac_levels;

  static EncoderConfig make(EncodeScheme scheme, int half_bits,
                            const TransferFn& transfer, double v_max,
                            double unit_pulse_s = 1e-9);

  int input_code_count() const { return 1 << (2 * half_bits); }
  int dac_level_count() const;
  long long latency_units() const;       // cycle length in unit pulses
  long long delay_chain_stages() const;  // longest pulse to synthesize
  double unit_current() const;           // current step between levels
  void calibrate(double base_current = 0.0);
  void validate() const;
};

PulseTrain encode_input(int code, const EncoderConfig& cfg);

// Charge in units of (unit pulse x unit current): sum of level*width over
// segments. Integer-exact; equals the code for every scheme.
double ideal_charge_units(const PulseTrain& train);

// Seeded Monte Carlo decode-error statistics under additive gaussian
// voltage noise. Noise draws are keyed by (seed, code, trial) and scaled
// by sigma afterwards, so sweeps over sigma reuse the same draws.
struct EncoderStats {
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
  long long latency_units = 0;
  int dac_levels = 0;
  long long delay_chain = 0;
};

EncoderStats measure_encoder(const EncoderConfig& cfg, double noise_sigma,
                             int trials_per_code, uint64_t seed);

}  // namespace kancim

#endif
