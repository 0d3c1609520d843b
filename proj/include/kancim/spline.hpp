#ifndef KANCIM_SPLINE_HPP_
#define KANCIM_SPLINE_HPP_

#include <Eigen/Dense>
#include <vector>

namespace kancim {

enum class DomainPolicy { Clamp, Reject };

enum class Activation { Relu, Silu };

/// Uniform B-spline basis over [domain_lo, domain_hi]: `grid` equal knot
/// intervals, polynomial degree `order`, knots extended `order` steps past
/// each end so every interval sees the same local basis shapes. The basis
/// has order + grid member functions.
struct BSplineSpec {
  int order = 3;
  int grid = 5;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  Eigen::VectorXd knots;  // grid + 2*order + 1 uniformly spaced values

  static BSplineSpec make(int order, int grid, double lo, double hi);

  int basis_count() const { return order + grid; }
  double spacing() const { return (domain_hi - domain_lo) / grid; }
  bool contains(double x) const { return x >= domain_lo && x <= domain_hi; }
  double clamp(double x) const;

  // Knot interval index in [0, grid-1]; x == domain_hi maps to the last one.
  int interval_of(double x) const;
};

// Degree-`degree` B-spline on integer knots 0..degree+1, evaluated at t.
// The argument is folded about the support midpoint before evaluation, so
// mirror pairs t and degree+1-t return bit-identical values.
double cardinal_bspline(int degree, double t);

// d/dt of the above.
double cardinal_bspline_derivative(int degree, double t);

// All basis values at x (length order + grid). x must lie in the domain;
// out-of-domain input throws std::domain_error (callers clamp or reject
// per their DomainPolicy before getting here).
Eigen::VectorXd basis_eval(const BSplineSpec& spec, double x);

// Derivatives of all basis functions at x.
Eigen::VectorXd basis_eval_derivative(const BSplineSpec& spec, double x);

// The order+1 possibly-nonzero basis values at x. Writes values[0..order]
// for basis indices first..first+order.
void basis_eval_active(const BSplineSpec& spec, double x, int* first,
                       double* values);

/// One KAN layer: every edge (o, j) carries a learnable spline plus a
/// residual base path out[o] += base_weights(o,j) * act(x[j]).
///
/// spline_coeffs is out_dim x (in_dim * basis_count), channel-major: the
/// coefficient of basis i on edge (o, j) lives at column j*basis_count + i.
struct KanLayer {
  int in_dim = 1;
  int out_dim = 1;
  BSplineSpec spec;
  Eigen::MatrixXd base_weights;   // out_dim x in_dim
  Eigen::MatrixXd spline_coeffs;  // out_dim x (in_dim * basis_count)
  Activation activation = Activation::Relu;

  static KanLayer make(int in_dim, int out_dim, const BSplineSpec& spec,
                       Activation act = Activation::Relu);

  int basis_count() const { return spec.basis_count(); }
  int coeff_cols() const { return in_dim * spec.basis_count(); }
  double coeff(int out, int in, int basis) const {
    return spline_coeffs(out, in * spec.basis_count() + basis);
  }
  void validate() const;  // dims, finiteness
};

struct KanModel {
  std::vector<KanLayer> layers;
  void validate() const;  // adjacent dims chain, per-layer checks
  int in_dim() const { return layers.front().in_dim; }
  int out_dim() const { return layers.back().out_dim; }
};

double apply_activation(Activation act, double x);
double activation_derivative(Activation act, double x);

// Flattened basis row for one input vector: [in_dim * basis_count].
Eigen::VectorXd basis_features(const BSplineSpec& spec, const Eigen::VectorXd& x,
                               DomainPolicy policy);

Eigen::VectorXd layer_forward(const KanLayer& layer, const Eigen::VectorXd& x,
                              DomainPolicy policy = DomainPolicy::Clamp);

// Batch variant: rows of X are samples.
Eigen::MatrixXd layer_forward(const KanLayer& layer, const Eigen::MatrixXd& X,
                              DomainPolicy policy = DomainPolicy::Clamp);

Eigen::MatrixXd model_forward(const KanModel& model, const Eigen::MatrixXd& X,
                              DomainPolicy policy = DomainPolicy::Clamp);

// Refit the layer's spline functions onto a finer grid (new_grid >= grid,
// same order and domain) by least squares over a dense sample of the
// domain (64 points per new knot interval, ridge 1e-8 on the normal
// equations). Base weights are untouched.
KanLayer grid_extend(const KanLayer& layer, int new_grid);

}  // namespace kancim

#endif
