#ifndef KANCIM_CROSSBAR_HPP_
#define KANCIM_CROSSBAR_HPP_

#include <Eigen/Dense>
#include <cstdint>

namespace kancim {

struct CrossbarConfig {
  int rows = 128;
  int cols = 64;
  double wire_r = 0.0;   // ohms per bit-line segment
  double g_on = 1e-4;    // siemens, cell storing 1
  double g_off = 0.0;    // siemens, cell storing 0
  double v_clamp = 0.2;  // volts held at the bit-line foot
  double c_sample = 1e-12;  // farads, sampling capacitor (cost metadata)
  int adc_bits = 12;
  double variation_sigma = 0.0;  // relative conductance spread
  uint64_t seed = 0;

  void validate() const;
};

/// One bit line modeled as a resistive ladder: the clamp holds v_clamp at
/// the foot, wire_r separates adjacent row nodes (the first segment sits
/// between the clamp and row 0), and each cell injects current through
/// its conductance from the driven word-line-side voltage to its node.
struct IrDropSolution {
  Eigen::VectorXd node_voltage;  // bit-line node per row
  Eigen::VectorXd cell_current;  // per row, from cell into the bit line
  double clamp_current = 0.0;    // total current collected at the foot
};

// Exact nodal analysis via the tridiagonal (Thomas) algorithm. wire_r of
// zero short-circuits every node to the clamp; that case with an
// all-zero conductance vector is a degenerate network and raises
// NumericError.
IrDropSolution solve_ir_drop(const Eigen::VectorXd& conductance,
                             const Eigen::VectorXd& drive_voltage,
                             const CrossbarConfig& cfg);

}  // namespace kancim

#endif
