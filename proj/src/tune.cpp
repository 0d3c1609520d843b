#include "kancim/tune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kancim/checkpoint.hpp"
#include "kancim/errors.hpp"
#include "kancim/rng.hpp"

namespace kancim {

namespace {

constexpr std::uint64_t kTuneWindowTag = 0x7e04;
constexpr char kStateHeader[] = "kancim-tune-state v1";

// Nearest rank (1-based) of the pct-th percentile over n ascending items.
int percentile_rank(int n, int pct) {
  const int k = (pct * n + 99) / 100;
  return std::clamp(k, 1, n);
}

std::vector<int> model_grids(const KanModel& model) {
  std::vector<int> g;
  g.reserve(model.layers.size());
  for (const auto& layer : model.layers) g.push_back(layer.spec.grid);
  return g;
}

KanModel rebuilt_at(const KanModel& model, const std::vector<int>& grids) {
  KanModel out;
  for (size_t l = 0; l < model.layers.size(); ++l) {
    const auto& src = model.layers[l];
    out.layers.push_back(KanLayer::make(
        src.in_dim, src.out_dim,
        BSplineSpec::make(src.spec.order, grids[l], src.spec.domain_lo,
                          src.spec.domain_hi),
        src.activation));
  }
  return out;
}

void check_dataset(const Dataset& ds, const KanModel& model,
                   const char* name) {
  if (ds.rows() < 1)
    throw ConfigError(std::string(name) + " dataset is empty");
  if (ds.feature_dim() != model.in_dim() ||
      ds.target_dim() != model.out_dim())
    throw ConfigError(std::string(name) +
                      " dataset dimensions do not match the model");
}

}  // namespace

const char* sensitivity_class_name(SensitivityClass c) {
  switch (c) {
    case SensitivityClass::High:
      return "HIGH";
    case SensitivityClass::Medium:
      return "MEDIUM";
    case SensitivityClass::Low:
      return "LOW";
  }
  return "?";
}

SensitivityProfile profile_sensitivity(const KanModel& model,
                                       const Dataset& val, LossKind loss,
                                       DomainPolicy policy) {
  model.validate();
  check_dataset(val, model, "validation");

  const size_t n_layers = model.layers.size();
  SensitivityProfile profile;
  profile.scores = Eigen::VectorXd::Zero(n_layers);

  ModelGrads grads;
  for (Eigen::Index s = 0; s < val.rows(); ++s) {
    model_loss_and_grads(model, val.features.row(s), val.targets.row(s), loss,
                         policy, &grads);
    for (size_t l = 0; l < n_layers; ++l) {
      const auto& d = grads.d_coeffs[l];
      profile.scores[l] += d.squaredNorm() / d.size();
    }
  }
  profile.scores /= static_cast<double>(val.rows());
  return profile;
}

void GridTemplates::validate() const {
  if (low < 1) throw ConfigError("grid template low must be >= 1");
  if (!(high > med && med > low))
    throw ConfigError("grid templates must satisfy high > med > low");
}

std::vector<int> assign_grids(SensitivityProfile& profile,
                              const GridTemplates& templates) {
  templates.validate();
  const int n = static_cast<int>(profile.scores.size());
  if (n < 1) throw ConfigError("sensitivity profile has no layers");
  for (int i = 0; i < n; ++i)
    if (!(profile.scores[i] >= 0.0) || !std::isfinite(profile.scores[i]))
      throw ConfigError("sensitivity scores must be finite and >= 0");

  std::vector<double> ascending(profile.scores.data(),
                                profile.scores.data() + n);
  std::sort(ascending.begin(), ascending.end());
  profile.tau_high = ascending[percentile_rank(n, 67) - 1];
  // One rank above the inclusive 33rd percentile: with the >= comparison
  // below, the inclusive value itself would pull the bottom tier into
  // the middle one.
  profile.tau_low =
      ascending[std::min(n, percentile_rank(n, 33) + 1) - 1];

  profile.classes.resize(n);
  std::vector<int> grids(n);
  for (int i = 0; i < n; ++i) {
    const double s = profile.scores[i];
    if (s >= profile.tau_high) {
      profile.classes[i] = SensitivityClass::High;
      grids[i] = templates.high;
    } else if (s >= profile.tau_low) {
      profile.classes[i] = SensitivityClass::Medium;
      grids[i] = templates.med;
    } else {
      profile.classes[i] = SensitivityClass::Low;
      grids[i] = templates.low;
    }
  }
  return grids;
}

void TuneConfig::validate() const {
  TrainConfig tc = train;
  tc.epochs = 1;
  tc.validate();
  if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be >= 0");
  if (window_epochs < 1) throw ConfigError("window_epochs must be >= 1");
  if (increment < 1) throw ConfigError("increment must be >= 1");
  if (max_grid < 1) throw ConfigError("max_grid must be >= 1");
  if (min_rel_improvement < 0.0)
    throw ConfigError("min_rel_improvement must be >= 0");
  if (max_windows < 0) throw ConfigError("max_windows must be >= 0");
  budget.validate();
  if (templates) templates->validate();
}

std::string to_json_line(const TuneRecord& record) {
  nlohmann::json j;
  j["window"] = record.window;
  j["epoch_end"] = record.epoch_end;
  j["val_start"] = record.val_start;
  j["val_end"] = record.val_end;
  j["grids"] = record.grids;
  j["cost"] = {{"area", record.cost.area},
               {"energy", record.cost.energy},
               {"latency", record.cost.latency},
               {"power", record.cost.power}};
  j["decision"] = record.decision;
  return j.dump();
}

void save_tune_state(const TuneState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write tune state: " + path);
  out << kStateHeader << "\n";
  out << "flags " << state.has_rollback << ' ' << state.warmed_up << ' '
      << state.finished << ' ' << state.infeasible << ' ' << state.window
      << ' ' << state.epochs_done << "\n";
  out << "classes " << state.classes.size();
  for (auto c : state.classes) out << ' ' << static_cast<int>(c);
  out << "\n";
  save_model(state.model, out);
  if (state.has_rollback) save_model(state.rollback_model, out);
  if (!out) throw ConfigError("tune state: write failed");
}

TuneState load_tune_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tune state: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kStateHeader)
    throw ConfigError(path + ": expected header '" + kStateHeader + "'");

  TuneState state;
  if (!std::getline(in, line))
    throw ConfigError(path + ": missing flags line");
  std::istringstream fs(line);
  std::string tag;
  if (!(fs >> tag >> state.has_rollback >> state.warmed_up >>
        state.finished >> state.infeasible >> state.window >>
        state.epochs_done) ||
      tag != "flags")
    throw ConfigError(path + ": bad flags line");

  if (!std::getline(in, line))
    throw ConfigError(path + ": missing classes line");
  std::istringstream cs(line);
  size_t n_classes = 0;
  if (!(cs >> tag >> n_classes) || tag != "classes")
    throw ConfigError(path + ": bad classes line");
  state.classes.resize(n_classes);
  for (auto& c : state.classes) {
    int v = 0;
    if (!(cs >> v) || v < 0 || v > 2)
      throw ConfigError(path + ": bad class value");
    c = static_cast<SensitivityClass>(v);
  }

  state.model = load_model(in);
  if (state.has_rollback) state.rollback_model = load_model(in);
  return state;
}

std::vector<int> TuneResult::grids() const { return model_grids(model); }

TuneResult tune_resume(TuneState& state, const Dataset& train_data,
                       const Dataset& val_data, const TuneConfig& cfg,
                       const TechParams& tech, const CrossbarConfig& crossbar,
                       const EncoderConfig& enc) {
  cfg.validate();
  tech.validate();
  crossbar.validate();
  enc.validate();
  state.model.validate();
  check_dataset(train_data, state.model, "train");
  check_dataset(val_data, state.model, "validation");

  const int grid_ceiling = static_cast<int>(
      std::min<long long>(cfg.max_grid, 1LL << cfg.quant.input_bits));

  auto cost_of = [&](const KanModel& m) {
    return estimate(m, cfg.quant, crossbar, enc, tech, cfg.wl_activity);
  };
  auto val_loss = [&](const KanModel& m) {
    return model_loss(m, val_data.features, val_data.targets, cfg.train.loss,
                      cfg.train.policy);
  };
  auto run_epochs = [&](const KanModel& m, int epochs, std::uint64_t salt) {
    TrainConfig tc = cfg.train;
    tc.epochs = epochs;
    tc.seed = derive_seed(cfg.train.seed, kTuneWindowTag, salt);
    return train_model(m, train_data, val_data, tc).model;
  };

  TuneResult result;
  auto record = [&](int window, double vs, double ve, const CostReport& cost,
                    const std::string& decision) {
    TuneRecord rec;
    rec.window = window;
    rec.epoch_end = state.epochs_done;
    rec.val_start = vs;
    rec.val_end = ve;
    rec.grids = model_grids(state.model);
    rec.cost = cost;
    rec.decision = decision;
    result.trace.push_back(std::move(rec));
  };

  if (!state.warmed_up && !state.finished) {
    // Shrink toward the budget before spending any training on a
    // configuration that can never be accepted.
    CostReport cost = cost_of(state.model);
    if (!check_constraints(cost, cfg.budget).pass) {
      std::vector<int> grids = model_grids(state.model);
      bool changed = false;
      while (!check_constraints(cost, cfg.budget).pass &&
             *std::max_element(grids.begin(), grids.end()) > 1) {
        for (auto& g : grids) g = std::max(1, g - 1);
        KanModel shrunk = rebuilt_at(state.model, grids);
        init_model_params(shrunk, cfg.train.seed);
        state.model = std::move(shrunk);
        cost = cost_of(state.model);
        changed = true;
      }
      const double v = val_loss(state.model);
      if (!check_constraints(cost, cfg.budget).pass) {
        state.finished = true;
        state.infeasible = true;
        record(0, v, v, cost, "infeasible");
      } else if (changed) {
        record(0, v, v, cost, "shrink");
      }
    }

    if (!state.finished) {
      if (cfg.warmup_epochs > 0) {
        state.model = run_epochs(state.model, cfg.warmup_epochs, 0);
        state.epochs_done += cfg.warmup_epochs;
      }

      if (cfg.templates) {
        SensitivityProfile profile = profile_sensitivity(
            state.model, val_data, cfg.train.loss, cfg.train.policy);
        std::vector<int> assigned = assign_grids(profile, *cfg.templates);
        state.classes = profile.classes;
        std::vector<int> grids = model_grids(state.model);
        bool grew = false;
        for (size_t l = 0; l < grids.size(); ++l) {
          const int target =
              std::max(grids[l], std::min(assigned[l], grid_ceiling));
          grew = grew || target != grids[l];
          grids[l] = target;
        }
        const double vs = val_loss(state.model);
        if (grew) {
          KanModel shadow = rebuilt_at(state.model, grids);
          const CostReport assigned_cost = cost_of(shadow);
          if (check_constraints(assigned_cost, cfg.budget).pass) {
            for (size_t l = 0; l < grids.size(); ++l)
              if (grids[l] != state.model.layers[l].spec.grid)
                state.model.layers[l] =
                    grid_extend(state.model.layers[l], grids[l]);
            record(0, vs, val_loss(state.model), assigned_cost, "assign");
          } else {
            record(0, vs, vs, cost_of(state.model), "assign-skipped");
          }
        } else {
          record(0, vs, vs, cost_of(state.model), "assign");
        }
      }

      state.warmed_up = true;
      state.window = 1;
    }
  }

  while (!state.finished &&
         (cfg.max_windows == 0 || state.window <= cfg.max_windows)) {
    const int window = state.window;
    const double vs = val_loss(state.model);
    state.model = run_epochs(state.model, cfg.window_epochs, window);
    state.epochs_done += cfg.window_epochs;
    const double ve = val_loss(state.model);
    const bool improved =
        ve < vs && (vs - ve) >= cfg.min_rel_improvement * std::abs(vs);

    if (!improved) {
      if (state.has_rollback) {
        state.model = std::move(state.rollback_model);
        state.rollback_model = KanModel{};
        state.has_rollback = false;
        record(window, vs, ve, cost_of(state.model), "rollback");
      } else {
        record(window, vs, ve, cost_of(state.model), "plateau");
      }
      state.finished = true;
      break;
    }

    // This window validated the extension that produced it, so the
    // pre-extension checkpoint is no longer needed.
    state.has_rollback = false;
    state.rollback_model = KanModel{};

    std::vector<int> extended = model_grids(state.model);
    bool any_eligible = false;
    for (auto& g : extended)
      if (g + cfg.increment <= grid_ceiling) {
        g += cfg.increment;
        any_eligible = true;
      }

    if (!any_eligible) {
      record(window, vs, ve, cost_of(state.model), "cap");
      state.finished = true;
      break;
    }

    const CostReport extended_cost = cost_of(rebuilt_at(state.model, extended));
    if (!check_constraints(extended_cost, cfg.budget).pass) {
      record(window, vs, ve, cost_of(state.model), "budget");
      state.finished = true;
      break;
    }

    state.rollback_model = state.model;
    state.has_rollback = true;
    for (size_t l = 0; l < extended.size(); ++l)
      if (extended[l] != state.model.layers[l].spec.grid)
        state.model.layers[l] = grid_extend(state.model.layers[l], extended[l]);
    record(window, vs, ve, extended_cost, "extend");
    state.window = window + 1;
  }

  result.model = state.model;
  result.infeasible = state.infeasible;
  result.finished = state.finished;
  result.final_cost = cost_of(state.model);
  result.classes = state.classes;
  result.layer_modes.assign(state.model.layers.size(), cfg.other_mode);
  if (state.classes.size() == state.model.layers.size()) {
    for (size_t l = 0; l < state.classes.size(); ++l)
      result.layer_modes[l] = state.classes[l] == SensitivityClass::High
                                  ? cfg.high_mode
                                  : cfg.other_mode;
  } else if (state.classes.empty()) {
    result.layer_modes.assign(state.model.layers.size(), cfg.high_mode);
  }
  return result;
}

TuneResult tune(const KanModel& initial, const Dataset& train_data,
                const Dataset& val_data, const TuneConfig& cfg,
                const TechParams& tech, const CrossbarConfig& crossbar,
                const EncoderConfig& enc) {
  TuneState state;
  state.model = initial;
  return tune_resume(state, train_data, val_data, cfg, tech, crossbar, enc);
}

}  // namespace kancim
