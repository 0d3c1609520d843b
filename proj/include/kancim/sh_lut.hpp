#ifndef KANCIM_SH_LUT_HPP_
#define KANCIM_SH_LUT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "kancim/quant.hpp"
#include "kancim/spline.hpp"

namespace kancim {

/// Shared lookup table for the quantized basis path. Within one knot
/// interval the K+1 active basis pieces are evaluated at the midpoints of
/// the per-interval codes; piece j at local code u mirrors piece K-j at
/// local code Q-1-u, so only one entry per mirror pair is stored and both
/// flat indices resolve to the same slot.
struct ShLut {
  int order = 3;              // K
  int grid = 5;               // G
  int codes_per_interval = 0; // Q
  bool pow2_decode = false;   // split codes by bit masking vs div/mod
  int gap_bits = 0;           // valid when pow2_decode
  int value_bits = 8;
  int center_code = -1;       // odd Q: the local code with no distinct mirror

  std::vector<int> stored;        // quantized piece values, hemi storage
  std::vector<int32_t> index_of;  // flat (piece*Q + u) -> slot in stored

  int full_entries() const { return (order + 1) * codes_per_interval; }
  int stored_entries() const { return static_cast<int>(stored.size()); }
  int value_scale() const { return (1 << value_bits) - 1; }
  int code_count() const { return grid * codes_per_interval; }
};

// Requires an aligned scheme whose grid matches the spline spec.
// value_bits -1 means "use scheme.input_bits"; valid range [4, 8].
ShLut build_sh_lut(const BSplineSpec& spec, const QuantScheme& scheme,
                   int value_bits = -1);

struct LutValues {
  int interval = 0;     // knot interval g decoded from the high part
  int first_basis = 0;  // active global basis indices are first..first+K
  std::vector<int> values;  // quantized piece values, one per active basis
};

// Decode an input code and fetch the K+1 active quantized basis values.
LutValues lut_lookup(const ShLut& lut, int code);

// Text round trip; load returns a table whose every field and entry is
// identical to what was saved.
void save_sh_lut(const std::string& path, const ShLut& lut);
ShLut load_sh_lut(const std::string& path);

}  // namespace kancim

#endif
