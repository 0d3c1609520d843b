#ifndef KANCIM_QUANT_HPP_
#define KANCIM_QUANT_HPP_

#include <Eigen/Dense>
#include <cstdint>

#include "kancim/spline.hpp"

namespace kancim {

// How input codes relate to the knot grid. Conventional places 2^bits
// codes over the domain with no alignment; Aligned forces the code count
// to the largest integer multiple of the grid size; AlignedPow2
// additionally forces a power-of-two number of codes per knot interval so
// the low bits of a code address within the interval directly.
enum class QuantMode { Conventional, Aligned, AlignedPow2 };

// Largest m >= 1 with grid*m <= 2^input_bits. InfeasibleError when even
// m=1 does not fit.
int solve_codes_per_interval(int grid, int input_bits);

// Largest e >= 0 with grid*2^e <= 2^input_bits. InfeasibleError when even
// e=0 does not fit.
int solve_gap_bits(int grid, int input_bits);

struct QuantScheme {
  QuantMode mode = QuantMode::AlignedPow2;
  int input_bits = 8;
  int grid = 5;
  int codes_per_interval = 0;  // aligned modes only
  int gap_bits = 0;            // AlignedPow2 only
  int coeff_bits = 8;

  static QuantScheme make(QuantMode mode, int grid, int input_bits,
                          int coeff_bits = 8);

  // Total number of representable input codes.
  int code_count() const {
    return mode == QuantMode::Conventional ? 1 << input_bits
                                           : grid * codes_per_interval;
  }
  int code_range_hi() const { return code_count() - 1; }
};

// Ties to even; used for every float->integer conversion in the
// quantized path so results do not depend on the FP environment.
long long round_half_even(double v);

// Input code = index of the uniform cell containing x (clamped to the
// domain); midpoint reconstruction.
int quantize_input(const BSplineSpec& spec, const QuantScheme& scheme,
                   double x);
double dequant_code(const BSplineSpec& spec, const QuantScheme& scheme,
                    int code);

// Symmetric per-layer quantization of spline coefficients. scale maps
// code +/-(2^{bits-1}-1) to +/-max|c|; an all-zero tensor keeps scale 1.
struct QuantizedCoeffs {
  Eigen::MatrixXi codes;  // out_dim x (in_dim * basis_count)
  double scale = 1.0;
  int bits = 8;
};

QuantizedCoeffs quantize_coeffs(const KanLayer& layer, int coeff_bits);

inline double dequant_coeff(const QuantizedCoeffs& q, int code) {
  return code * q.scale;
}

}  // namespace kancim

#endif
