#include "kancim/resources.hpp"

#include "kancim/errors.hpp"

namespace kancim {

ResourcePair count_resources(const QuantScheme& scheme, int order) {
  if (order < 1) throw ConfigError("order must be >= 1");
  if (scheme.mode == QuantMode::Conventional)
    throw ConfigError("count_resources compares an aligned scheme against "
                      "the conventional baseline");

  const int n_basis = order + scheme.grid;
  const int q = scheme.codes_per_interval;

  ResourcePair out;
  out.baseline.lut_entries =
      static_cast<long long>(n_basis) << scheme.input_bits;
  out.baseline.switches = {{SwitchKind::Mux, 2 * q, n_basis}};
  out.baseline.decoder_bits = {scheme.input_bits};

  const long long full = static_cast<long long>(order + 1) * q;
  out.optimized.lut_entries = (full + 1) / 2;
  out.optimized.switches = {{SwitchKind::Mux, q, order + 1},
                            {SwitchKind::Demux, order + 2, order + 1}};
  if (scheme.mode == QuantMode::AlignedPow2)
    out.optimized.decoder_bits = {scheme.input_bits - scheme.gap_bits,
                                  scheme.gap_bits};
  else
    out.optimized.decoder_bits = {scheme.input_bits};
  return out;
}

}  // namespace kancim
