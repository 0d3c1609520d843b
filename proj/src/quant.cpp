#include "kancim/quant.hpp"

#include <cmath>

#include "kancim/errors.hpp"

namespace kancim {

namespace {

void check_alignment_args(int grid, int input_bits) {
  if (grid < 1) throw ConfigError("grid must be >= 1");
  if (input_bits < 1 || input_bits > 20)
    throw ConfigError("input_bits must be in [1, 20]");
}

}  // namespace

int solve_codes_per_interval(int grid, int input_bits) {
  check_alignment_args(grid, input_bits);
  const int codes = 1 << input_bits;
  if (grid > codes)
    throw InfeasibleError("no integer code multiple fits: grid " +
                          std::to_string(grid) + " exceeds 2^" +
                          std::to_string(input_bits));
  return codes / grid;
}

int solve_gap_bits(int grid, int input_bits) {
  check_alignment_args(grid, input_bits);
  const int codes = 1 << input_bits;
  if (grid > codes)
    throw InfeasibleError("no power-of-two code multiple fits: grid " +
                          std::to_string(grid) + " exceeds 2^" +
                          std::to_string(input_bits));
  int e = 0;
  while ((static_cast<long long>(grid) << (e + 1)) <= codes) ++e;
  return e;
}

QuantScheme QuantScheme::make(QuantMode mode, int grid, int input_bits,
                              int coeff_bits) {
  check_alignment_args(grid, input_bits);
  if (coeff_bits < 2 || coeff_bits > 16)
    throw ConfigError("coeff_bits must be in [2, 16]");
  QuantScheme s;
  s.mode = mode;
  s.grid = grid;
  s.input_bits = input_bits;
  s.coeff_bits = coeff_bits;
  switch (mode) {
    case QuantMode::Conventional:
      break;
    case QuantMode::Aligned:
      s.codes_per_interval = solve_codes_per_interval(grid, input_bits);
      break;
    case QuantMode::AlignedPow2:
      s.gap_bits = solve_gap_bits(grid, input_bits);
      s.codes_per_interval = 1 << s.gap_bits;
      break;
  }
  return s;
}

long long round_half_even(double v) {
  const double f = std::floor(v);
  const double frac = v - f;
  const long long base = static_cast<long long>(f);
  if (frac > 0.5) return base + 1;
  if (frac < 0.5) return base;
  return (base % 2 == 0) ? base : base + 1;
}

int quantize_input(const BSplineSpec& spec, const QuantScheme& scheme,
                   double x) {
  const int count = scheme.code_count();
  x = spec.clamp(x);
  const double v =
      (x - spec.domain_lo) * count / (spec.domain_hi - spec.domain_lo);
  int code = static_cast<int>(std::floor(v));
  if (code < 0) code = 0;
  if (code > count - 1) code = count - 1;
  return code;
}

double dequant_code(const BSplineSpec& spec, const QuantScheme& scheme,
                    int code) {
  const int count = scheme.code_count();
  if (code < 0 || code >= count)
    throw std::out_of_range("input code " + std::to_string(code) +
                            " outside [0, " + std::to_string(count - 1) + "]");
  return spec.domain_lo +
         (code + 0.5) * (spec.domain_hi - spec.domain_lo) / count;
}

QuantizedCoeffs quantize_coeffs(const KanLayer& layer, int coeff_bits) {
  if (coeff_bits < 2 || coeff_bits > 16)
    throw ConfigError("coeff_bits must be in [2, 16]");
  if (!layer.spline_coeffs.allFinite())
    throw NumericError("cannot quantize non-finite coefficients");

  QuantizedCoeffs out;
  out.bits = coeff_bits;
  const int max_code = (1 << (coeff_bits - 1)) - 1;
  const double peak = layer.spline_coeffs.cwiseAbs().maxCoeff();
  out.scale = peak > 0.0 ? peak / max_code : 1.0;

  out.codes.resize(layer.spline_coeffs.rows(), layer.spline_coeffs.cols());
  for (Eigen::Index r = 0; r < out.codes.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.codes.cols(); ++c) {
      long long q = round_half_even(layer.spline_coeffs(r, c) / out.scale);
      if (q > max_code) q = max_code;
      if (q < -max_code) q = -max_code;
      out.codes(r, c) = static_cast<int>(q);
    }
  }
  return out;
}

}  // namespace kancim
