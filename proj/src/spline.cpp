#include "kancim/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kancim/errors.hpp"

namespace kancim {

namespace {
constexpr int kMaxDegree = 15;
}

BSplineSpec BSplineSpec::make(int order, int grid, double lo, double hi) {
  if (order < 1 || order > kMaxDegree)
    throw ConfigError("spline order must be in [1, 15], got " +
                      std::to_string(order));
  if (grid < 1)
    throw ConfigError("spline grid must be >= 1, got " + std::to_string(grid));
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
    throw ConfigError("spline domain must satisfy lo < hi");
  BSplineSpec spec;
  spec.order = order;
  spec.grid = grid;
  spec.domain_lo = lo;
  spec.domain_hi = hi;
  const int n_knots = grid + 2 * order + 1;
  spec.knots.resize(n_knots);
  const double h = (hi - lo) / grid;
  for (int i = 0; i < n_knots; ++i) spec.knots[i] = lo + (i - order) * h;
  return spec;
}

double BSplineSpec::clamp(double x) const {
  return std::min(std::max(x, domain_lo), domain_hi);
}

int BSplineSpec::interval_of(double x) const {
  const double v = (x - domain_lo) * grid / (domain_hi - domain_lo);
  int g = static_cast<int>(std::floor(v));
  return std::min(std::max(g, 0), grid - 1);
}

double cardinal_bspline(int degree, double t) {
  if (degree < 0 || degree > kMaxDegree)
    throw std::invalid_argument("cardinal_bspline: degree out of range");
  if (degree == 0) return (t >= 0.0 && t < 1.0) ? 1.0 : 0.0;
  if (!(t > 0.0 && t < degree + 1.0)) return 0.0;
  // Fold about the support midpoint: N_d(t) == N_d(d+1-t), and evaluating
  // every argument on the same half keeps mirror pairs bit-identical.
  const double half = 0.5 * (degree + 1);
  if (t > half) t = (degree + 1) - t;

  double vals[kMaxDegree + 2] = {0.0};
  int j = static_cast<int>(std::floor(t));
  if (j > degree) j = degree;
  vals[j] = 1.0;
  for (int d = 1; d <= degree; ++d) {
    const double inv = 1.0 / d;
    for (int i = 0; i <= degree - d; ++i) {
      vals[i] = ((t - i) * vals[i] + (i + d + 1 - t) * vals[i + 1]) * inv;
    }
  }
  return vals[0];
}

double cardinal_bspline_derivative(int degree, double t) {
  if (degree < 0 || degree > kMaxDegree)
    throw std::invalid_argument("cardinal_bspline_derivative: degree out of range");
  if (degree == 0) return 0.0;
  return cardinal_bspline(degree - 1, t) - cardinal_bspline(degree - 1, t - 1.0);
}

namespace {

// Local coordinates of x: knot interval g in [0, grid-1] and offset s in
// [0, 1] within it (s may reach 1 at the right domain edge).
void local_coords(const BSplineSpec& spec, double x, int* g, double* s) {
  const double v =
      (x - spec.domain_lo) * spec.grid / (spec.domain_hi - spec.domain_lo);
  int gi = static_cast<int>(std::floor(v));
  gi = std::min(std::max(gi, 0), spec.grid - 1);
  *g = gi;
  *s = v - gi;
}

void check_domain(const BSplineSpec& spec, double x) {
  if (!spec.contains(x))
    throw std::domain_error("input " + std::to_string(x) +
                            " outside spline domain [" +
                            std::to_string(spec.domain_lo) + ", " +
                            std::to_string(spec.domain_hi) + "]");
}

}  // namespace

void basis_eval_active(const BSplineSpec& spec, double x, int* first,
                       double* values) {
  check_domain(spec, x);
  int g;
  double s;
  local_coords(spec, x, &g, &s);
  *first = g;
  const int k = spec.order;
  for (int j = 0; j <= k; ++j) values[j] = cardinal_bspline(k, k - j + s);
}

Eigen::VectorXd basis_eval(const BSplineSpec& spec, double x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.basis_count());
  int first;
  double vals[kMaxDegree + 1];
  basis_eval_active(spec, x, &first, vals);
  for (int j = 0; j <= spec.order; ++j) out[first + j] = vals[j];
  return out;
}

Eigen::VectorXd basis_eval_derivative(const BSplineSpec& spec, double x) {
  check_domain(spec, x);
  int g;
  double s;
  local_coords(spec, x, &g, &s);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.basis_count());
  const int k = spec.order;
  const double inv_h = spec.grid / (spec.domain_hi - spec.domain_lo);
  for (int j = 0; j <= k; ++j)
    out[g + j] = cardinal_bspline_derivative(k, k - j + s) * inv_h;
  return out;
}

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::Relu:
      return x > 0.0 ? x : 0.0;
    case Activation::Silu:
      return x / (1.0 + std::exp(-x));
  }
  return 0.0;
}

double activation_derivative(Activation act, double x) {
  switch (act) {
    case Activation::Relu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::Silu: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 + x * (1.0 - s));
    }
  }
  return 0.0;
}

KanLayer KanLayer::make(int in_dim, int out_dim, const BSplineSpec& spec,
                        Activation act) {
  if (in_dim < 1 || out_dim < 1)
    throw ConfigError("layer dims must be >= 1");
  KanLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.spec = spec;
  layer.activation = act;
  layer.base_weights = Eigen::MatrixXd::Zero(out_dim, in_dim);
  layer.spline_coeffs =
      Eigen::MatrixXd::Zero(out_dim, in_dim * spec.basis_count());
  return layer;
}

void KanLayer::validate() const {
  if (in_dim < 1 || out_dim < 1) throw ConfigError("layer dims must be >= 1");
  if (base_weights.rows() != out_dim || base_weights.cols() != in_dim)
    throw ConfigError("base weight shape mismatch");
  if (spline_coeffs.rows() != out_dim ||
      spline_coeffs.cols() != static_cast<Eigen::Index>(in_dim) * basis_count())
    throw ConfigError("spline coefficient shape mismatch");
  if (!base_weights.allFinite() || !spline_coeffs.allFinite())
    throw NumericError("layer parameters contain non-finite values");
}

void KanModel::validate() const {
  if (layers.empty()) throw ConfigError("model has no layers");
  for (size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && layers[l].in_dim != layers[l - 1].out_dim)
      throw ConfigError("layer " + std::to_string(l) +
                        " input dim does not match previous output dim");
  }
}

Eigen::VectorXd basis_features(const BSplineSpec& spec,
                               const Eigen::VectorXd& x, DomainPolicy policy) {
  const int b = spec.basis_count();
  Eigen::VectorXd feat = Eigen::VectorXd::Zero(x.size() * b);
  double vals[kMaxDegree + 1];
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double xj = x[j];
    if (!spec.contains(xj)) {
      if (policy == DomainPolicy::Clamp) {
        xj = spec.clamp(xj);
      } else {
        throw NumericError("input " + std::to_string(xj) +
                           " outside spline domain and policy is reject");
      }
    }
    int first;
    basis_eval_active(spec, xj, &first, vals);
    for (int i = 0; i <= spec.order; ++i) feat[j * b + first + i] = vals[i];
  }
  return feat;
}

Eigen::VectorXd layer_forward(const KanLayer& layer, const Eigen::VectorXd& x,
                              DomainPolicy policy) {
  if (x.size() != layer.in_dim)
    throw ConfigError("layer input size mismatch");
  Eigen::VectorXd a(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    a[j] = apply_activation(layer.activation, x[j]);
  Eigen::VectorXd feat = basis_features(layer.spec, x, policy);
  return layer.base_weights * a + layer.spline_coeffs * feat;
}

Eigen::MatrixXd layer_forward(const KanLayer& layer, const Eigen::MatrixXd& X,
                              DomainPolicy policy) {
  if (X.cols() != layer.in_dim)
    throw ConfigError("layer input size mismatch");
  Eigen::MatrixXd Y(X.rows(), layer.out_dim);
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    Y.row(r) = layer_forward(layer, Eigen::VectorXd(X.row(r)), policy).transpose();
  return Y;
}

Eigen::MatrixXd model_forward(const KanModel& model, const Eigen::MatrixXd& X,
                              DomainPolicy policy) {
  Eigen::MatrixXd cur = X;
  for (const auto& layer : model.layers) cur = layer_forward(layer, cur, policy);
  return cur;
}

KanLayer grid_extend(const KanLayer& layer, int new_grid) {
  const BSplineSpec& old_spec = layer.spec;
  if (new_grid < old_spec.grid)
    throw ConfigError("grid_extend target " + std::to_string(new_grid) +
                      " is smaller than current grid " +
                      std::to_string(old_spec.grid));
  BSplineSpec new_spec = BSplineSpec::make(
      old_spec.order, new_grid, old_spec.domain_lo, old_spec.domain_hi);

  constexpr int kSamplesPerInterval = 64;
  const int n_samples = kSamplesPerInterval * new_grid;
  const int b_old = old_spec.basis_count();
  const int b_new = new_spec.basis_count();
  const double span = old_spec.domain_hi - old_spec.domain_lo;

  Eigen::MatrixXd A_old(n_samples, b_old);
  Eigen::MatrixXd A_new(n_samples, b_new);
  for (int t = 0; t < n_samples; ++t) {
    const double x = old_spec.domain_lo + (t + 0.5) * span / n_samples;
    A_old.row(t) = basis_eval(old_spec, x).transpose();
    A_new.row(t) = basis_eval(new_spec, x).transpose();
  }

  Eigen::MatrixXd gram = A_new.transpose() * A_new;
  Eigen::LLT<Eigen::MatrixXd> chol(gram);
  Eigen::LDLT<Eigen::MatrixXd> ridge_solver;
  const bool use_ridge = chol.info() != Eigen::Success;
  if (use_ridge) {
    // Singular normal equations: fall back to a ridge-regularized solve.
    constexpr double kRidge = 1e-8;
    gram.diagonal().array() += kRidge;
    ridge_solver.compute(gram);
    if (ridge_solver.info() != Eigen::Success)
      throw NumericError("grid_extend normal equations are not factorizable");
  }

  KanLayer out = layer;
  out.spec = new_spec;
  out.spline_coeffs.resize(layer.out_dim,
                           static_cast<Eigen::Index>(layer.in_dim) * b_new);
  for (int j = 0; j < layer.in_dim; ++j) {
    // Targets for every output edge of channel j at once.
    Eigen::MatrixXd targets =
        A_old * layer.spline_coeffs.block(0, j * b_old, layer.out_dim, b_old)
                    .transpose();
    Eigen::MatrixXd rhs = A_new.transpose() * targets;
    Eigen::MatrixXd coeffs =
        use_ridge ? Eigen::MatrixXd(ridge_solver.solve(rhs))
                  : Eigen::MatrixXd(chol.solve(rhs));
    out.spline_coeffs.block(0, j * b_new, layer.out_dim, b_new) =
        coeffs.transpose();
  }
  if (!out.spline_coeffs.allFinite())
    throw NumericError("grid_extend produced non-finite coefficients");
  return out;
}

}  // namespace kancim
