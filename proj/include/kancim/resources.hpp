#ifndef KANCIM_RESOURCES_HPP_
#define KANCIM_RESOURCES_HPP_

#include <vector>

#include "kancim/quant.hpp"

namespace kancim {

enum class SwitchKind { Mux, Demux };

struct SwitchSpec {
  SwitchKind kind = SwitchKind::Mux;
  int ways = 1;   // a `ways`-to-1 mux or 1-to-`ways` demux
  int count = 0;
};

struct ResourceCount {
  long long lut_entries = 0;
  std::vector<SwitchSpec> switches;
  std::vector<int> decoder_bits;  // one entry per decoder
};

struct ResourcePair {
  ResourceCount baseline;   // per-basis full-range tables
  ResourceCount optimized;  // one shared hemi table
  double lut_reduction_ratio() const {
    return optimized.lut_entries > 0
               ? static_cast<double>(baseline.lut_entries) /
                     optimized.lut_entries
               : 0.0;
  }
};

// Entry/switch/decoder inventory for the conventional per-basis layout vs
// the shared-table layout of the given aligned scheme. The shared decode
// splits the input address only in the power-of-two mode; otherwise the
// optimized side keeps the full-width decoder.
ResourcePair count_resources(const QuantScheme& scheme, int order);

}  // namespace kancim

#endif
