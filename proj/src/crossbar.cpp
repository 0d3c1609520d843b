#include "kancim/crossbar.hpp"

#include "kancim/errors.hpp"

namespace kancim {

void CrossbarConfig::validate() const {
  if (rows < 1 || rows > 4096) throw ConfigError("rows must be in [1, 4096]");
  if (cols < 1 || cols > 4096) throw ConfigError("cols must be in [1, 4096]");
  if (!(g_on > g_off) || g_off < 0.0)
    throw ConfigError("cell conductances must satisfy g_on > g_off >= 0");
  if (wire_r < 0.0) throw ConfigError("wire_r must be >= 0");
  if (adc_bits < 1 || adc_bits > 24)
    throw ConfigError("adc_bits must be in [1, 24]");
  if (variation_sigma < 0.0)
    throw ConfigError("variation_sigma must be >= 0");
}

IrDropSolution solve_ir_drop(const Eigen::VectorXd& conductance,
                             const Eigen::VectorXd& drive_voltage,
                             const CrossbarConfig& cfg) {
  const Eigen::Index n = conductance.size();
  if (n < 1) throw ConfigError("ir-drop solve needs at least one row");
  if (drive_voltage.size() != n)
    throw ConfigError("conductance and drive vectors disagree in length");
  if ((conductance.array() < 0.0).any())
    throw ConfigError("conductances must be >= 0");

  IrDropSolution sol;
  if (cfg.wire_r == 0.0) {
    if ((conductance.array() == 0.0).all())
      throw NumericError(
          "degenerate network: zero wire resistance and no conductive cells");
    sol.node_voltage = Eigen::VectorXd::Constant(n, cfg.v_clamp);
    sol.cell_current =
        (conductance.array() * (drive_voltage.array() - cfg.v_clamp)).matrix();
    sol.clamp_current = sol.cell_current.sum();
    return sol;
  }

  // Solve for the rise above the clamp, y_i = v_i - v_clamp. KCL per
  // node i: (g_i + w_left + w_right) y_i - w y_{i-1} - w y_{i+1}
  //       = g_i (u_i - v_clamp).
  // The rise is tiny next to the node voltages themselves; solving for
  // it directly keeps the clamp current w*y_0 free of cancellation.
  const double w = 1.0 / cfg.wire_r;
  Eigen::VectorXd diag(n), rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double neighbors = (i + 1 < n) ? 2.0 * w : w;
    diag[i] = conductance[i] + neighbors;
    rhs[i] = conductance[i] * (drive_voltage[i] - cfg.v_clamp);
  }

  // Thomas sweep with constant off-diagonal -w.
  Eigen::VectorXd c_prime(n), d_prime(n);
  c_prime[0] = -w / diag[0];
  d_prime[0] = rhs[0] / diag[0];
  for (Eigen::Index i = 1; i < n; ++i) {
    const double denom = diag[i] + w * c_prime[i - 1];
    c_prime[i] = -w / denom;
    d_prime[i] = (rhs[i] + w * d_prime[i - 1]) / denom;
  }
  Eigen::VectorXd rise(n);
  rise[n - 1] = d_prime[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i)
    rise[i] = d_prime[i] - c_prime[i] * rise[i + 1];

  sol.node_voltage = rise.array() + cfg.v_clamp;
  sol.cell_current = conductance.cwiseProduct(
      (drive_voltage.array() - cfg.v_clamp).matrix() - rise);
  sol.clamp_current = w * rise[0];
  return sol;
}

}  // namespace kancim
