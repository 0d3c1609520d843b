#include "kancim/config.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <utility>

#include "kancim/errors.hpp"

namespace kancim {

namespace {

using nlohmann::json;

// Tracks which keys of one JSON object were consumed, so done() can point
// at the first unknown one. A null object stands for an absent optional
// section: every getter falls through to its default.
class Section {
 public:
  Section(const json* obj, std::string source, std::string path)
      : obj_(obj), source_(std::move(source)), path_(std::move(path)) {}

  std::string where(const char* key) const {
    return source_ + ": " + path_ + "/" + key;
  }

  const json* find(const char* key) {
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    if (it == obj_->end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  int get_int(const char* key, int def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_integer())
      throw ConfigError(where(key) + ": expected integer");
    return v->get<int>();
  }

  std::uint64_t get_u64(const char* key, std::uint64_t def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_unsigned() &&
        !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      throw ConfigError(where(key) + ": expected non-negative integer");
    return v->get<std::uint64_t>();
  }

  double get_double(const char* key, double def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError(where(key) + ": expected number");
    return v->get<double>();
  }

  std::optional<double> get_opt_double(const char* key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(where(key) + ": expected number");
    return v->get<double>();
  }

  std::string get_string(const char* key, std::string def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(where(key) + ": expected string");
    return v->get<std::string>();
  }

  std::vector<int> get_int_list(const char* key, std::vector<int> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array())
      throw ConfigError(where(key) + ": expected array of integers");
    std::vector<int> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer())
        throw ConfigError(where(key) + ": expected array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<double> get_double_list(const char* key,
                                      std::vector<double> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array())
      throw ConfigError(where(key) + ": expected array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number())
        throw ConfigError(where(key) + ": expected array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  template <typename E>
  E get_enum(const char* key,
             std::initializer_list<std::pair<const char*, E>> names, E def) {
    const json* v = find(key);
    if (!v) return def;
    if (v->is_string()) {
      const auto s = v->get<std::string>();
      for (const auto& [name, value] : names)
        if (s == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : names) {
      if (!allowed.empty()) allowed += '|';
      allowed += name;
    }
    throw ConfigError(where(key) + ": expected one of " + allowed + ", got " +
                      v->dump());
  }

  // Object-valued key; absent yields a null section, and presence of the
  // section is reported so optional blocks (templates) can act on it.
  Section child(const char* key, bool* present = nullptr) {
    const json* v = find(key);
    if (present) *present = v != nullptr;
    if (!v) return Section(nullptr, source_, path_ + "/" + key);
    if (!v->is_object()) throw ConfigError(where(key) + ": expected object");
    return Section(v, source_, path_ + "/" + key);
  }

  void done() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items())
      if (!seen_.count(key))
        throw ConfigError(source_ + ": unknown key '" + key + "' at " +
                          (path_.empty() ? "/" : path_));
  }

 private:
  const json* obj_;
  std::string source_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_dataset(Section sec, DatasetSpec& out) {
  out.source = sec.get_enum("source",
                            {{"synthetic", DatasetSpec::Source::Synthetic},
                             {"csv", DatasetSpec::Source::Csv}},
                            out.source);
  out.path = sec.get_string("path", out.path);
  out.task = sec.get_enum("task",
                          {{"smooth1d", SyntheticTask::Smooth1d},
                           {"gaussian_nd", SyntheticTask::GaussianNd}},
                          out.task);
  out.train_rows = sec.get_int("train_rows", out.train_rows);
  out.val_rows = sec.get_int("val_rows", out.val_rows);
  out.noise_sigma = sec.get_double("noise_sigma", out.noise_sigma);
  out.val_fraction = sec.get_double("val_fraction", out.val_fraction);
  sec.done();
}

void parse_model(Section sec, ModelSpec& out) {
  out.widths = sec.get_int_list("widths", out.widths);
  out.order = sec.get_int("order", out.order);
  out.grid = sec.get_int("grid", out.grid);
  out.domain_lo = sec.get_double("domain_lo", out.domain_lo);
  out.domain_hi = sec.get_double("domain_hi", out.domain_hi);
  out.activation = sec.get_enum(
      "activation",
      {{"relu", Activation::Relu}, {"silu", Activation::Silu}},
      out.activation);
  sec.done();
}

void parse_train(Section sec, TrainSpec& out) {
  out.cfg.epochs = sec.get_int("epochs", out.cfg.epochs);
  out.cfg.batch_size = sec.get_int("batch_size", out.cfg.batch_size);
  out.cfg.learning_rate = sec.get_double("learning_rate", out.cfg.learning_rate);
  out.cfg.momentum = sec.get_double("momentum", out.cfg.momentum);
  out.cfg.loss = sec.get_enum(
      "loss", {{"mse", LossKind::Mse}, {"cross_entropy", LossKind::CrossEntropy}},
      out.cfg.loss);
  out.cfg.policy = sec.get_enum(
      "policy", {{"clamp", DomainPolicy::Clamp}, {"reject", DomainPolicy::Reject}},
      out.cfg.policy);
  out.target_loss = sec.get_double("target_loss", out.target_loss);
  sec.done();
}

void parse_quant(Section sec, QuantSpec& out) {
  out.mode = sec.get_enum("mode",
                          {{"conventional", QuantMode::Conventional},
                           {"aligned", QuantMode::Aligned},
                           {"aligned_pow2", QuantMode::AlignedPow2}},
                          out.mode);
  out.input_bits = sec.get_int("input_bits", out.input_bits);
  out.coeff_bits = sec.get_int("coeff_bits", out.coeff_bits);
  out.value_bits = sec.get_int("value_bits", out.value_bits);
  out.grid_sweep = sec.get_int_list("grid_sweep", out.grid_sweep);
  sec.done();
}

void parse_crossbar(Section sec, CrossbarConfig& out) {
  out.rows = sec.get_int("rows", out.rows);
  out.cols = sec.get_int("cols", out.cols);
  out.wire_r = sec.get_double("wire_r", out.wire_r);
  out.g_on = sec.get_double("g_on", out.g_on);
  out.g_off = sec.get_double("g_off", out.g_off);
  out.v_clamp = sec.get_double("v_clamp", out.v_clamp);
  out.c_sample = sec.get_double("c_sample", out.c_sample);
  out.adc_bits = sec.get_int("adc_bits", out.adc_bits);
  out.variation_sigma = sec.get_double("variation_sigma", out.variation_sigma);
  sec.done();
}

void parse_encoder(Section sec, EncoderSpec& out) {
  out.scheme = sec.get_enum("scheme",
                            {{"voltage", EncodeScheme::PureVoltage},
                             {"pwm", EncodeScheme::PurePwm},
                             {"tmdv", EncodeScheme::Tmdv}},
                            out.scheme);
  out.half_bits = sec.get_int("half_bits", out.half_bits);
  out.unit_pulse_s = sec.get_double("unit_pulse_s", out.unit_pulse_s);
  out.v_max = sec.get_double("v_max", out.v_max);
  out.noise_sigma = sec.get_double("noise_sigma", out.noise_sigma);
  Section tf = sec.child("transfer");
  out.transfer.kind = tf.get_enum(
      "kind",
      {{"linear", TransferFn::Kind::LinearAboveThreshold},
       {"square_law", TransferFn::Kind::SquareLaw}},
      out.transfer.kind);
  out.transfer.v_threshold = tf.get_double("v_threshold", out.transfer.v_threshold);
  out.transfer.gain = tf.get_double("gain", out.transfer.gain);
  tf.done();
  out.noise_grid = sec.get_double_list("noise_grid", out.noise_grid);
  out.trials_per_code = sec.get_int("trials_per_code", out.trials_per_code);
  sec.done();
}

void parse_mapping(Section sec, MappingSpec& out) {
  out.array_rows = sec.get_int_list("array_rows", out.array_rows);
  out.grids = sec.get_int_list("grids", out.grids);
  out.score.alpha = sec.get_double("alpha", out.score.alpha);
  out.score.beta = sec.get_double("beta", out.score.beta);
  out.score.epsilon = sec.get_double("epsilon", out.score.epsilon);
  out.score.active_threshold =
      sec.get_double("active_threshold", out.score.active_threshold);
  out.channel = sec.get_int("channel", out.channel);
  out.layer = sec.get_int("layer", out.layer);
  out.train_rows = sec.get_int("train_rows", out.train_rows);
  out.eval_rows = sec.get_int("eval_rows", out.eval_rows);
  sec.done();
}

void parse_tune(Section sec, TuneSpec& out) {
  out.warmup_epochs = sec.get_int("warmup_epochs", out.warmup_epochs);
  out.window_epochs = sec.get_int("window_epochs", out.window_epochs);
  out.increment = sec.get_int("increment", out.increment);
  out.max_grid = sec.get_int("max_grid", out.max_grid);
  out.min_rel_improvement =
      sec.get_double("min_rel_improvement", out.min_rel_improvement);
  out.max_windows = sec.get_int("max_windows", out.max_windows);
  Section budget = sec.child("budget");
  out.budget.area = budget.get_opt_double("area");
  out.budget.energy = budget.get_opt_double("energy");
  out.budget.latency = budget.get_opt_double("latency");
  budget.done();
  bool have_templates = false;
  Section tpl = sec.child("templates", &have_templates);
  if (have_templates) {
    GridTemplates t;
    t.high = tpl.get_int("high", t.high);
    t.med = tpl.get_int("med", t.med);
    t.low = tpl.get_int("low", t.low);
    tpl.done();
    out.templates = t;
  }
  const auto mode_names =
      std::initializer_list<std::pair<const char*, EncoderMode>>{
          {"performance", EncoderMode::Performance},
          {"accuracy", EncoderMode::Accuracy}};
  out.high_mode = sec.get_enum("high_mode", mode_names, out.high_mode);
  out.other_mode = sec.get_enum("other_mode", mode_names, out.other_mode);
  out.wl_activity = sec.get_double("wl_activity", out.wl_activity);
  sec.done();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

KanModel ModelSpec::build(std::uint64_t init_seed) const {
  const BSplineSpec spec = BSplineSpec::make(order, grid, domain_lo, domain_hi);
  KanModel model;
  for (size_t i = 0; i + 1 < widths.size(); ++i)
    model.layers.push_back(
        KanLayer::make(widths[i], widths[i + 1], spec, activation));
  init_model_params(model, init_seed);
  return model;
}

EncoderConfig EncoderSpec::build() const {
  EncoderConfig cfg =
      EncoderConfig::make(scheme, half_bits, transfer, v_max, unit_pulse_s);
  cfg.voltage_noise_sigma = noise_sigma;
  return cfg;
}

void ExperimentConfig::validate() const {
  require(dataset.source != DatasetSpec::Source::Csv || !dataset.path.empty(),
          "dataset: csv source needs a path");
  require(dataset.train_rows >= 1, "dataset: train_rows must be >= 1");
  require(dataset.val_rows >= 0, "dataset: val_rows must be >= 0");
  require(dataset.noise_sigma >= 0, "dataset: noise_sigma must be >= 0");
  require(dataset.val_fraction >= 0 && dataset.val_fraction < 1,
          "dataset: val_fraction must be in [0, 1)");

  require(model.widths.size() >= 2, "model: widths needs >= 2 entries");
  for (int w : model.widths)
    require(w >= 1, "model: every width must be >= 1");
  require(model.order >= 1, "model: order must be >= 1");
  require(model.grid >= 1, "model: grid must be >= 1");
  require(model.domain_hi > model.domain_lo,
          "model: domain_hi must exceed domain_lo");

  train.cfg.validate();

  require(quant.input_bits >= 1 && quant.input_bits <= 16,
          "quant: input_bits must be in [1, 16]");
  require(quant.coeff_bits >= 2 && quant.coeff_bits <= 16,
          "quant: coeff_bits must be in [2, 16]");
  require(quant.value_bits == -1 ||
              (quant.value_bits >= 4 && quant.value_bits <= 8),
          "quant: value_bits must be -1 or in [4, 8]");
  require(!quant.grid_sweep.empty(), "quant: grid_sweep must not be empty");
  for (int g : quant.grid_sweep)
    require(g >= 1, "quant: every sweep grid must be >= 1");

  crossbar.validate();
  encoder.build().validate();
  require(encoder.trials_per_code >= 1,
          "encoder: trials_per_code must be >= 1");
  for (double s : encoder.noise_grid)
    require(s >= 0, "encoder: noise_grid values must be >= 0");

  mapping.score.validate();
  require(mapping.array_rows.size() == mapping.grids.size() &&
              !mapping.array_rows.empty(),
          "mapping: array_rows and grids must be matched non-empty lists");
  require(mapping.channel >= 0, "mapping: channel must be >= 0");
  require(mapping.layer >= 0, "mapping: layer must be >= 0");
  require(mapping.train_rows >= 1 && mapping.eval_rows >= 1,
          "mapping: train_rows and eval_rows must be >= 1");

  require(tune.warmup_epochs >= 0, "tune: warmup_epochs must be >= 0");
  require(tune.window_epochs >= 1, "tune: window_epochs must be >= 1");
  require(tune.increment >= 1, "tune: increment must be >= 1");
  require(tune.max_grid >= 1, "tune: max_grid must be >= 1");
  require(tune.min_rel_improvement >= 0,
          "tune: min_rel_improvement must be >= 0");
  require(tune.max_windows >= 0, "tune: max_windows must be >= 0");
  tune.budget.validate();
  if (tune.templates) tune.templates->validate();
  require(tune.wl_activity <= 1.0, "tune: wl_activity must be <= 1");
}

TechParams ExperimentConfig::tech() const {
  return tech_params_path.empty() ? TechParams::illustrative()
                                  : load_tech_params(tech_params_path);
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::string& source_name) {
  if (!doc.is_object())
    throw ConfigError(source_name + ": config root must be an object");
  Section root(&doc, source_name, "");
  ExperimentConfig cfg;
  cfg.seed = root.get_u64("seed", cfg.seed);
  cfg.output_dir = root.get_string("output_dir", cfg.output_dir);
  cfg.tech_params_path = root.get_string("tech_params", cfg.tech_params_path);
  cfg.checkpoint_path = root.get_string("checkpoint", cfg.checkpoint_path);
  parse_dataset(root.child("dataset"), cfg.dataset);
  parse_model(root.child("model"), cfg.model);
  parse_train(root.child("train"), cfg.train);
  parse_quant(root.child("quant"), cfg.quant);
  parse_crossbar(root.child("crossbar"), cfg.crossbar);
  parse_encoder(root.child("encoder"), cfg.encoder);
  parse_mapping(root.child("mapping"), cfg.mapping);
  parse_tune(root.child("tune"), cfg.tune);
  root.done();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_experiment_config(doc, path);
}

}  // namespace kancim
