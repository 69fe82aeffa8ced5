#include "neuboots/experiments/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "neuboots/error.hpp"

namespace neuboots::experiments {

using nlohmann::json;

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "regression_coverage") return ExperimentKind::regression_coverage;
  if (name == "calibration") return ExperimentKind::calibration;
  if (name == "active_learning") return ExperimentKind::active_learning;
  if (name == "ood") return ExperimentKind::ood;
  if (name == "imbalanced") return ExperimentKind::imbalanced;
  if (name == "bench_speed") return ExperimentKind::bench_speed;
  throw ConfigError("unknown experiment kind \"" + std::string(name) +
                    "\" (choices: regression_coverage, calibration, active_learning, ood, imbalanced, "
                    "bench_speed)");
}

std::string_view to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::regression_coverage: return "regression_coverage";
    case ExperimentKind::calibration: return "calibration";
    case ExperimentKind::active_learning: return "active_learning";
    case ExperimentKind::ood: return "ood";
    case ExperimentKind::imbalanced: return "imbalanced";
    case ExperimentKind::bench_speed: return "bench_speed";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "baseline") return Method::baseline;
  if (name == "neuboots") return Method::neuboots;
  if (name == "mc_dropout") return Method::mc_dropout;
  if (name == "standard_bootstrap") return Method::standard_bootstrap;
  if (name == "rwb") return Method::rwb;
  if (name == "deep_ensemble") return Method::deep_ensemble;
  throw ConfigError("unknown method \"" + std::string(name) +
                    "\" (choices: baseline, neuboots, mc_dropout, standard_bootstrap, rwb, deep_ensemble)");
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::neuboots: return "neuboots";
    case Method::mc_dropout: return "mc_dropout";
    case Method::standard_bootstrap: return "standard_bootstrap";
    case Method::rwb: return "rwb";
    case Method::deep_ensemble: return "deep_ensemble";
  }
  return "?";
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.sgd.learning_rate = 0.01;
  c.sgd.momentum = 0.9;
  c.sgd.batch_size = 32;
  c.sgd.epochs = 100;
  c.sgd.lr_schedule = nn::LrSchedule::cosine;
  auto& d = c.dataset;
  switch (kind) {
    case ExperimentKind::regression_coverage:
      d.generator = "sine";
      d.n = 500;
      d.noise_sd = 0.3;
      c.model.hidden = {64, 64, 64};
      c.model.activation = nn::Activation::tanh;
      c.sgd.learning_rate = 0.0015;
      c.sgd.batch_size = 25;
      c.sgd.epochs = 800;
      c.B = 200;
      c.methods = {Method::neuboots, Method::standard_bootstrap};
      // Plain members converge in fewer, larger steps than the generator,
      // whose alpha-scaled features need the small rate.
      c.coverage.baseline_members = 50;
      c.coverage.baseline_replications = 10;
      c.coverage.baseline_epochs = 300;
      c.coverage.baseline_learning_rate = 0.01;
      break;
    case ExperimentKind::calibration:
      d.generator = "two_moons";
      d.n = 500;
      d.test_n = 2000;
      d.classification.noise = 0.2;
      d.classification.label_noise = 0.1;
      c.methods = {Method::baseline, Method::neuboots, Method::mc_dropout, Method::deep_ensemble};
      break;
    case ExperimentKind::active_learning:
      d.generator = "two_moons";
      d.test_n = 2000;
      d.classification.noise = 0.2;
      d.classification.label_noise = 0.05;
      c.model.hidden = {32, 16};
      c.methods = {Method::neuboots};
      break;
    case ExperimentKind::ood:
      d.generator = "gaussians";
      d.n = 600;
      d.classification.num_classes = 3;
      d.classification.separation = 3.0;
      d.classification.noise = 1.0;
      c.B = 30;
      c.methods = {Method::neuboots, Method::mc_dropout};
      break;
    case ExperimentKind::imbalanced:
      d.generator = "imbalanced_gaussians";
      d.test_n = 2000;
      d.classification.num_classes = 10;
      d.classification.separation = 4.0;
      d.classification.noise = 1.0;
      d.classification.counts = {50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
      c.methods = {Method::baseline, Method::neuboots};
      break;
    case ExperimentKind::bench_speed:
      c.B = 100;
      c.methods = {Method::neuboots, Method::mc_dropout};
      break;
  }
  return c;
}

namespace {

// Reads fields from a JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  template <class Fn>
  void with(const char* key, Fn&& fn) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    fn(*it, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + where(key.c_str()));
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string s = path_.empty() ? "" : path_;
    if (key) s += (s.empty() ? "" : ".") + std::string(key);
    return "\"" + (s.empty() ? std::string("config") : s) + "\"";
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string str_at(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

json sgd_to_json(const nn::SgdConfig& s) {
  return {{"learning_rate", s.learning_rate}, {"momentum", s.momentum},
          {"weight_decay", s.weight_decay},   {"batch_size", s.batch_size},
          {"epochs", s.epochs},               {"lr_schedule", nn::to_string(s.lr_schedule)}};
}

void sgd_from_json(const json& j, const std::string& path, nn::SgdConfig& s) {
  ObjectReader r(j, path);
  r.get("learning_rate", s.learning_rate);
  r.get("momentum", s.momentum);
  r.get("weight_decay", s.weight_decay);
  r.get("batch_size", s.batch_size);
  r.get("epochs", s.epochs);
  r.with("lr_schedule", [&](const json& v, const std::string& w) { s.lr_schedule = nn::parse_schedule(str_at(v, w)); });
  r.finish();
}

json classification_to_json(const ClassificationParams& p) {
  return {{"noise", p.noise},       {"separation", p.separation}, {"label_noise", p.label_noise},
          {"num_classes", p.num_classes}, {"dim", p.dim},        {"counts", p.counts},
          {"shift", p.shift}};
}

void classification_from_json(const json& j, const std::string& path, ClassificationParams& p) {
  ObjectReader r(j, path);
  r.get("noise", p.noise);
  r.get("separation", p.separation);
  r.get("label_noise", p.label_noise);
  r.get("num_classes", p.num_classes);
  r.get("dim", p.dim);
  r.get("counts", p.counts);
  r.get("shift", p.shift);
  r.finish();
}

json dataset_to_json(const DatasetSpec& d) {
  json j{{"source", d.source}, {"n", d.n}, {"test_n", d.test_n}};
  if (d.source == "csv") {
    j["csv_path"] = d.csv_path;
    j["test_csv_path"] = d.test_csv_path;
    j["schema"] = {{"task", d.schema.task == nn::TaskKind::regression ? "regression" : "classification"},
                   {"label_column", d.schema.label_column},
                   {"target_columns", d.schema.target_columns},
                   {"feature_columns", d.schema.feature_columns},
                   {"classes", d.schema.classes}};
  } else {
    j["generator"] = d.generator;
    j["noise_sd"] = d.noise_sd;
    j["classification"] = classification_to_json(d.classification);
  }
  return j;
}

void dataset_from_json(const json& j, const std::string& path, DatasetSpec& d) {
  ObjectReader r(j, path);
  r.get("source", d.source);
  r.get("generator", d.generator);
  r.get("n", d.n);
  r.get("test_n", d.test_n);
  r.get("noise_sd", d.noise_sd);
  r.with("classification", [&](const json& v, const std::string&) {
    classification_from_json(v, path + ".classification", d.classification);
  });
  r.get("csv_path", d.csv_path);
  r.get("test_csv_path", d.test_csv_path);
  r.with("schema", [&](const json& v, const std::string&) {
    ObjectReader s(v, path + ".schema");
    s.with("task", [&](const json& t, const std::string& w) {
      const auto task = str_at(t, w);
      if (task == "regression") {
        d.schema.task = nn::TaskKind::regression;
      } else if (task == "classification") {
        d.schema.task = nn::TaskKind::classification;
      } else {
        throw ConfigError(w + " must be \"regression\" or \"classification\"");
      }
    });
    s.get("label_column", d.schema.label_column);
    s.get("target_columns", d.schema.target_columns);
    s.get("feature_columns", d.schema.feature_columns);
    s.get("classes", d.schema.classes);
    s.finish();
  });
  r.finish();
}

json section_to_json(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::regression_coverage: {
      const auto& p = c.coverage;
      return {{"replications", p.replications},         {"grid_points", p.grid_points},
              {"grid_lower", p.grid_lower},             {"grid_upper", p.grid_upper},
              {"level", p.level},                       {"baseline_members", p.baseline_members},
              {"baseline_replications", p.baseline_replications},
              {"baseline_epochs", p.baseline_epochs},
              {"baseline_learning_rate", p.baseline_learning_rate}};
    }
    case ExperimentKind::calibration:
    case ExperimentKind::imbalanced:
      return {{"ece_bins", c.calibration.ece_bins}, {"bagging_b", c.calibration.bagging_b}};
    case ExperimentKind::active_learning: {
      const auto& p = c.active_learning;
      return {{"initial", p.initial}, {"query", p.query}, {"stages", p.stages},
              {"pool", p.pool},       {"acquisitions", p.acquisitions}};
    }
    case ExperimentKind::ood: {
      const auto& p = c.ood;
      return {{"shift", p.shift}, {"n_in", p.n_in}, {"n_out", p.n_out},
              {"validation_fraction", p.validation_fraction}, {"b_sweep", p.b_sweep}};
    }
    case ExperimentKind::bench_speed: {
      const auto& p = c.bench;
      return {{"depth", p.depth},       {"width", p.width},     {"input_dim", p.input_dim},
              {"output_dim", p.output_dim}, {"inputs", p.inputs}, {"b_values", p.b_values},
              {"repeats", p.repeats},   {"train_n", p.train_n}, {"train_epochs", p.train_epochs}};
    }
  }
  return json::object();
}

const char* section_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::regression_coverage: return "coverage";
    case ExperimentKind::calibration:
    case ExperimentKind::imbalanced: return "calibration";
    case ExperimentKind::active_learning: return "active_learning";
    case ExperimentKind::ood: return "ood";
    case ExperimentKind::bench_speed: return "bench";
  }
  return "";
}

void section_from_json(const json& j, const std::string& path, ExperimentConfig& c) {
  ObjectReader r(j, path);
  switch (c.kind) {
    case ExperimentKind::regression_coverage: {
      auto& p = c.coverage;
      r.get("replications", p.replications);
      r.get("grid_points", p.grid_points);
      r.get("grid_lower", p.grid_lower);
      r.get("grid_upper", p.grid_upper);
      r.get("level", p.level);
      r.get("baseline_members", p.baseline_members);
      r.get("baseline_replications", p.baseline_replications);
      r.get("baseline_epochs", p.baseline_epochs);
      r.get("baseline_learning_rate", p.baseline_learning_rate);
      break;
    }
    case ExperimentKind::calibration:
    case ExperimentKind::imbalanced:
      r.get("ece_bins", c.calibration.ece_bins);
      r.get("bagging_b", c.calibration.bagging_b);
      break;
    case ExperimentKind::active_learning: {
      auto& p = c.active_learning;
      r.get("initial", p.initial);
      r.get("query", p.query);
      r.get("stages", p.stages);
      r.get("pool", p.pool);
      r.get("acquisitions", p.acquisitions);
      break;
    }
    case ExperimentKind::ood: {
      auto& p = c.ood;
      r.get("shift", p.shift);
      r.get("n_in", p.n_in);
      r.get("n_out", p.n_out);
      r.get("validation_fraction", p.validation_fraction);
      r.get("b_sweep", p.b_sweep);
      break;
    }
    case ExperimentKind::bench_speed: {
      auto& p = c.bench;
      r.get("depth", p.depth);
      r.get("width", p.width);
      r.get("input_dim", p.input_dim);
      r.get("output_dim", p.output_dim);
      r.get("inputs", p.inputs);
      r.get("b_values", p.b_values);
      r.get("repeats", p.repeats);
      r.get("train_n", p.train_n);
      r.get("train_epochs", p.train_epochs);
      break;
    }
  }
  r.finish();
}

bool is_classification_kind(ExperimentKind k) {
  return k == ExperimentKind::calibration || k == ExperimentKind::active_learning ||
         k == ExperimentKind::ood || k == ExperimentKind::imbalanced;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  json j{{"schema_version", c.schema_version},
         {"kind", to_string(c.kind)},
         {"dataset", dataset_to_json(c.dataset)},
         {"model", {{"hidden", c.model.hidden}, {"activation", nn::to_string(c.model.activation)}}},
         {"methods", std::move(methods)},
         {"B", c.B},
         {"sgd", sgd_to_json(c.sgd)},
         {"dropout_p", c.dropout_p},
         {"ensemble_members", c.ensemble_members},
         {"seeds", c.seeds},
         {"output_dir", c.output_dir},
         {"threads", c.threads}};
  j[section_name(c.kind)] = section_to_json(c);
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto sv = j.find("schema_version");
  if (sv == j.end()) throw ConfigError("config is missing \"schema_version\"");
  if (!sv->is_number_integer() || sv->get<int>() != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version (this build reads version " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  const auto kind_it = j.find("kind");
  if (kind_it == j.end()) throw ConfigError("config is missing \"kind\"");
  ExperimentConfig c = default_config(parse_experiment_kind(str_at(*kind_it, "\"kind\"")));

  ObjectReader r(j, "");
  r.get("schema_version", c.schema_version);
  r.with("kind", [](const json&, const std::string&) {});
  r.with("dataset", [&](const json& v, const std::string&) { dataset_from_json(v, "dataset", c.dataset); });
  r.with("model", [&](const json& v, const std::string&) {
    ObjectReader m(v, "model");
    m.get("hidden", c.model.hidden);
    m.with("activation", [&](const json& a, const std::string& w) {
      c.model.activation = nn::parse_activation(str_at(a, w));
    });
    m.finish();
  });
  r.with("methods", [&](const json& v, const std::string& w) {
    if (!v.is_array()) throw ConfigError(w + " must be an array of method names");
    c.methods.clear();
    for (const auto& m : v) c.methods.push_back(parse_method(str_at(m, w)));
  });
  r.get("B", c.B);
  r.with("sgd", [&](const json& v, const std::string&) { sgd_from_json(v, "sgd", c.sgd); });
  r.get("dropout_p", c.dropout_p);
  r.get("ensemble_members", c.ensemble_members);
  r.get("seeds", c.seeds);
  r.get("output_dir", c.output_dir);
  r.get("threads", c.threads);
  r.with(section_name(c.kind), [&](const json& v, const std::string&) {
    section_from_json(v, section_name(c.kind), c);
  });
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (schema_version != kConfigSchemaVersion) fail("unsupported schema_version");
  sgd.validate();
  if (seeds.empty()) fail("seeds must not be empty");
  if (B == 0) fail("B must be >= 1");
  if (methods.empty() && kind != ExperimentKind::bench_speed) fail("methods must not be empty");
  if (model.hidden.empty() && kind != ExperimentKind::bench_speed) {
    fail("model.hidden needs at least one layer (its last width is S)");
  }
  for (auto w : model.hidden) {
    if (w == 0) fail("model.hidden widths must be >= 1");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout_p must be in [0, 1)");
  if (ensemble_members == 0) fail("ensemble_members must be >= 1");
  if (dataset.source != "synthetic" && dataset.source != "csv") {
    fail("dataset.source must be \"synthetic\" or \"csv\"");
  }
  if (dataset.source == "csv" && dataset.csv_path.empty()) fail("dataset.csv_path is required for CSV data");
  if (dataset.source == "csv" && kind == ExperimentKind::regression_coverage) {
    fail("regression_coverage needs a synthetic dataset (the true function is required)");
  }
  if (dataset.source == "synthetic" && kind != ExperimentKind::bench_speed) {
    if (kind == ExperimentKind::regression_coverage) {
      parse_regression_function(dataset.generator);
    } else if (dataset.generator != "two_moons" && dataset.generator != "gaussians" &&
               dataset.generator != "imbalanced_gaussians") {
      fail("dataset.generator \"" + dataset.generator +
           "\" is not a classification generator (choices: two_moons, gaussians, imbalanced_gaussians)");
    }
  }
  if (is_classification_kind(kind) && dataset.test_n == 0 && dataset.test_csv_path.empty()) {
    fail("dataset.test_n must be >= 1");
  }
  switch (kind) {
    case ExperimentKind::regression_coverage:
      if (coverage.replications == 0) fail("coverage.replications must be >= 1");
      if (coverage.grid_points == 0) fail("coverage.grid_points must be >= 1");
      if (!(coverage.grid_lower <= coverage.grid_upper)) fail("coverage.grid_lower must be <= grid_upper");
      if (!(coverage.level > 0.0 && coverage.level < 1.0)) fail("coverage.level must be in (0, 1)");
      if (coverage.baseline_members < 2) fail("coverage.baseline_members must be >= 2");
      if (!(coverage.baseline_learning_rate >= 0.0)) fail("coverage.baseline_learning_rate must be >= 0");
      if (B < 2) fail("B must be >= 2 for confidence bands");
      break;
    case ExperimentKind::calibration:
    case ExperimentKind::imbalanced:
      if (calibration.ece_bins == 0) fail("calibration.ece_bins must be >= 1");
      for (auto b : calibration.bagging_b) {
        if (b == 0) fail("calibration.bagging_b entries must be >= 1");
      }
      break;
    case ExperimentKind::active_learning:
      if (active_learning.initial < 2) fail("active_learning.initial must be >= 2");
      if (active_learning.stages == 0) fail("active_learning.stages must be >= 1");
      if (active_learning.pool < active_learning.query * (active_learning.stages - 1)) {
        fail("active_learning.pool is too small for query * (stages - 1) acquisitions");
      }
      for (const auto& a : active_learning.acquisitions) {
        if (a != "entropy" && a != "random") {
          fail("unknown acquisition \"" + a + "\" (choices: entropy, random)");
        }
      }
      if (active_learning.acquisitions.empty()) fail("active_learning.acquisitions must not be empty");
      for (auto m : methods) {
        if (m == Method::neuboots && !model.hidden.empty() && model.hidden.back() > active_learning.initial) {
          fail("neuboots needs S = model.hidden.back() <= active_learning.initial (one sample per block)");
        }
      }
      break;
    case ExperimentKind::ood:
      if (ood.n_in < 4 || ood.n_out < 4) fail("ood.n_in and ood.n_out must be >= 4");
      if (!(ood.validation_fraction > 0.0 && ood.validation_fraction < 1.0)) {
        fail("ood.validation_fraction must be in (0, 1)");
      }
      if (!std::isfinite(ood.shift)) fail("ood.shift must be finite");
      for (auto b : ood.b_sweep) {
        if (b < 2) fail("ood.b_sweep entries must be >= 2 (the logit std needs two draws)");
      }
      if (B < 2) fail("B must be >= 2 for OOD features");
      break;
    case ExperimentKind::bench_speed:
      if (bench.depth == 0 || bench.width == 0 || bench.input_dim == 0 || bench.output_dim == 0 ||
          bench.inputs == 0 || bench.repeats == 0 || bench.train_n == 0 || bench.train_epochs == 0) {
        fail("bench sizes must all be >= 1");
      }
      if (bench.b_values.empty()) fail("bench.b_values must not be empty");
      for (auto b : bench.b_values) {
        if (b == 0) fail("bench.b_values entries must be >= 1");
      }
      break;
  }
}

}  // namespace neuboots::experiments
