#include "kancim/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kancim/errors.hpp"

namespace kancim {

namespace {

constexpr char kModelHeader[] = "kancim-model v1";

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

void put_matrix(std::ostream& out, const char* tag, const Eigen::MatrixXd& m) {
  out << tag;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ' ';
      put(out, m(r, c));
    }
  out << '\n';
}

std::string expect_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError(std::string("model checkpoint: unexpected end before ") +
                      what);
  return line;
}

Eigen::MatrixXd read_matrix(std::istream& in, const char* tag,
                            Eigen::Index rows, Eigen::Index cols) {
  std::istringstream ls(expect_line(in, tag));
  std::string got;
  ls >> got;
  if (got != tag)
    throw ConfigError("model checkpoint: expected '" + std::string(tag) +
                      "', got '" + got + "'");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(ls >> m(r, c)))
        throw ConfigError("model checkpoint: short '" + std::string(tag) +
                          "' row");
  double extra;
  if (ls >> extra)
    throw ConfigError("model checkpoint: trailing values after '" +
                      std::string(tag) + "'");
  return m;
}

const char* activation_name(Activation a) {
  return a == Activation::Relu ? "relu" : "silu";
}

Activation activation_from(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "silu") return Activation::Silu;
  throw ConfigError("model checkpoint: unknown activation '" + name + "'");
}

}  // namespace

void save_model(const KanModel& model, std::ostream& out) {
  model.validate();
  out << kModelHeader << "\n";
  out << "layers " << model.layers.size() << "\n";
  for (const auto& layer : model.layers) {
    out << "layer " << layer.in_dim << ' ' << layer.out_dim << ' '
        << layer.spec.order << ' ' << layer.spec.grid << ' ';
    put(out, layer.spec.domain_lo);
    out << ' ';
    put(out, layer.spec.domain_hi);
    out << ' ' << activation_name(layer.activation) << '\n';
    put_matrix(out, "base", layer.base_weights);
    put_matrix(out, "coeffs", layer.spline_coeffs);
  }
  if (!out) throw ConfigError("model checkpoint: write failed");
}

KanModel load_model(std::istream& in) {
  if (expect_line(in, "header") != kModelHeader)
    throw ConfigError(std::string("model checkpoint: expected header '") +
                      kModelHeader + "'");
  std::istringstream count_line(expect_line(in, "layer count"));
  std::string tag;
  size_t n_layers = 0;
  if (!(count_line >> tag >> n_layers) || tag != "layers")
    throw ConfigError("model checkpoint: expected 'layers <count>'");

  KanModel model;
  for (size_t l = 0; l < n_layers; ++l) {
    std::istringstream ls(expect_line(in, "layer line"));
    int in_dim = 0, out_dim = 0, order = 0, grid = 0;
    double lo = 0.0, hi = 0.0;
    std::string act;
    if (!(ls >> tag >> in_dim >> out_dim >> order >> grid >> lo >> hi >>
          act) ||
        tag != "layer")
      throw ConfigError("model checkpoint: bad layer line");
    KanLayer layer = KanLayer::make(in_dim, out_dim,
                                    BSplineSpec::make(order, grid, lo, hi),
                                    activation_from(act));
    layer.base_weights = read_matrix(in, "base", out_dim, in_dim);
    layer.spline_coeffs = read_matrix(in, "coeffs", out_dim,
                                      layer.coeff_cols());
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

void save_model(const KanModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  save_model(model, out);
}

KanModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  return load_model(in);
}

}  // namespace kancim
