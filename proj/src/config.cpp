#include "unmixlab/config.hpp"

#include "unmixlab/error.hpp"
#include "unmixlab/hashing.hpp"
#include "unmixlab/spectra_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>

namespace unmixlab {
namespace {

using json = nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void get_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

double snr_from_json(const json& v) {
  if (v.is_null()) return kNoNoise;
  if (v.is_string() && (v == "inf" || v == "none")) return kNoNoise;
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("snr_db must be finite, null or \"inf\"");
  return d;
}

json snr_to_json(double snr) { return std::isinf(snr) ? json(nullptr) : json(snr); }

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = parse_override_value(assignment.substr(eq + 1));
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

MixingModelSpec mixing_from_json(const json& j) {
  check_keys(j, {"kind", "sampling", "gamma", "b", "p", "p_max"}, "mixing");
  MixingModelSpec s;
  if (j.contains("kind")) s.kind = parse_mixing_kind(j.at("kind").get<std::string>());
  if (j.contains("sampling")) {
    const std::string v = j.at("sampling").get<std::string>();
    if (v == "fixed") s.sampling = ParameterSampling::Fixed;
    else if (v == "per_pixel") s.sampling = ParameterSampling::PerPixel;
    else throw ConfigError("mixing.sampling must be 'fixed' or 'per_pixel'");
  }
  get_opt(j, "gamma", s.gamma);
  if (j.contains("b") && !j.at("b").is_null()) s.b = j.at("b").get<double>();
  if (j.contains("p") && !j.at("p").is_null()) s.p = j.at("p").get<double>();
  get_opt(j, "p_max", s.p_max);
  return s;
}

json mixing_to_json(const MixingModelSpec& s) {
  json j = {{"kind", to_string(s.kind)},
            {"sampling", s.sampling == ParameterSampling::PerPixel ? "per_pixel" : "fixed"},
            {"p_max", s.p_max}};
  if (!s.gamma.empty()) j["gamma"] = s.gamma;
  if (s.b) j["b"] = *s.b;
  if (s.p) j["p"] = *s.p;
  return j;
}

}  // namespace

std::uint64_t scene_seed(const RunConfig& c) { return c.seed; }
std::uint64_t mixing_seed(const RunConfig& c) { return c.seed + 1; }

std::uint64_t noise_seed(const RunConfig& c, MixingKind kind, double snr_db) {
  const std::string tag = to_string(kind) + "/" + std::to_string(snr_db);
  return fnv1a64(tag, c.seed + 2);
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("UNMIXLAB_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(s);
  } catch (const std::exception&) {
    throw ConfigError(std::string("UNMIXLAB_SEED is not a non-negative integer: ") + v);
  }
}

RunConfig run_config_from_json(json doc, const std::vector<std::string>& overrides,
                               std::optional<std::uint64_t> seed_override, const std::filesystem::path& base_dir) {
  if (doc.is_null()) doc = json::object();
  for (const std::string& o : overrides) apply_override(doc, o);
  if (seed_override) doc["seed"] = *seed_override;

  RunConfig c;
  try {
    check_keys(doc, {"seed", "library", "scene", "mixing", "snr_db", "training", "experiment"}, "run config");
    get_opt(doc, "seed", c.seed);

    if (doc.contains("library")) {
      const json& l = doc.at("library");
      check_keys(l, {"path", "endmembers", "bands"}, "library");
      if (l.contains("path")) c.library.path = l.at("path").get<std::string>();
      get_opt(l, "endmembers", c.library.endmembers);
      if (l.contains("bands") && !l.at("bands").is_null()) c.library.bands = l.at("bands").get<int>();
    }
    if (c.library.path.empty()) throw ConfigError("library.path is required");
    if (c.library.path.is_relative() && !base_dir.empty())
    c.library.path = std::filesystem::absolute(base_dir / c.library.path).lexically_normal();
    if (c.library.bands && *c.library.bands < 1) throw ConfigError("library.bands must be positive");

    if (doc.contains("scene")) {
      const json& s = doc.at("scene");
      check_keys(s, {"height", "width", "block_size", "smoothing_radius", "dirichlet_alpha"}, "scene");
      get_opt(s, "height", c.scene.height);
      get_opt(s, "width", c.scene.width);
      get_opt(s, "block_size", c.scene.block_size);
      get_opt(s, "smoothing_radius", c.scene.smoothing_radius);
      get_opt(s, "dirichlet_alpha", c.scene.dirichlet_alpha);
    }
    c.scene.endmember_names = c.library.endmembers;
    c.scene.seed = scene_seed(c);
    c.scene.validate();

    if (doc.contains("mixing")) c.mixing = mixing_from_json(doc.at("mixing"));
    c.mixing.seed = mixing_seed(c);
    c.mixing.validate(static_cast<int>(c.library.endmembers.size()));

    if (doc.contains("snr_db")) c.snr_db = snr_from_json(doc.at("snr_db"));

    if (doc.contains("training")) c.training = training_config_from_json(doc.at("training"));
    c.training.seed = c.seed + 3;
    c.training.validate();

    if (doc.contains("experiment")) {
      const json& e = doc.at("experiment");
      check_keys(e, {"models", "snr_db", "methods", "train_model", "pnmm_b", "mlm_p_max"}, "experiment");
      if (e.contains("models")) {
        c.experiment.models.clear();
        for (const json& m : e.at("models")) c.experiment.models.push_back(parse_mixing_kind(m.get<std::string>()));
      }
      if (e.contains("snr_db")) {
        c.experiment.snr_db.clear();
        for (const json& v : e.at("snr_db")) c.experiment.snr_db.push_back(snr_from_json(v));
      }
      get_opt(e, "methods", c.experiment.methods);
      if (e.contains("train_model")) c.experiment.train_model = parse_mixing_kind(e.at("train_model").get<std::string>());
      get_opt(e, "pnmm_b", c.experiment.pnmm_b);
      get_opt(e, "mlm_p_max", c.experiment.mlm_p_max);
    }
    if (c.experiment.models.empty() || c.experiment.snr_db.empty() || c.experiment.methods.empty())
      throw ConfigError("experiment needs at least one model, SNR level and method");
    for (const std::string& m : c.experiment.methods)
      if (m != "fcls" && m != "ppnm" && m != "mlm" && m != "lcgu")
        throw ConfigError("unknown experiment method '" + m + "'");
    if (!(c.experiment.mlm_p_max >= 0.0 && c.experiment.mlm_p_max < 1.0))
      throw ConfigError("experiment.mlm_p_max must lie in [0,1)");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }

  c.document = run_config_to_json(c);
  c.hash = json_hash(c.document);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  // A run manifest carries its full config; accept it directly for replay.
  if (doc.is_object() && doc.contains("config") && doc.contains("config_hash")) doc = doc.at("config");
  return run_config_from_json(std::move(doc), overrides, seed_from_environment(), path.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  json lib = {{"path", c.library.path.string()}, {"endmembers", c.library.endmembers}};
  if (c.library.bands) lib["bands"] = *c.library.bands;
  json exp_models = json::array();
  for (MixingKind k : c.experiment.models) exp_models.push_back(to_string(k));
  json exp_snr = json::array();
  for (double s : c.experiment.snr_db) exp_snr.push_back(snr_to_json(s));
  json training = to_json(c.training);
  training.erase("seed");
  return {{"seed", c.seed},
          {"library", lib},
          {"scene",
           {{"height", c.scene.height},
            {"width", c.scene.width},
            {"block_size", c.scene.block_size},
            {"smoothing_radius", c.scene.smoothing_radius},
            {"dirichlet_alpha", c.scene.dirichlet_alpha}}},
          {"mixing", mixing_to_json(c.mixing)},
          {"snr_db", snr_to_json(c.snr_db)},
          {"training", training},
          {"experiment",
           {{"models", exp_models},
            {"snr_db", exp_snr},
            {"methods", c.experiment.methods},
            {"train_model", to_string(c.experiment.train_model)},
            {"pnmm_b", c.experiment.pnmm_b},
            {"mlm_p_max", c.experiment.mlm_p_max}}}};
}

EndmemberMatrix load_configured_library(const RunConfig& c) {
  EndmemberMatrix m = load_endmember_library(c.library.path, c.library.endmembers);
  if (c.library.bands && *c.library.bands != m.bands()) m = resample_bands(m, *c.library.bands);
  m.validate();
  return m;
}

MixingModelSpec experiment_mixing_spec(const RunConfig& c, MixingKind kind) {
  MixingModelSpec s;
  s.kind = kind;
  s.seed = mixing_seed(c);
  switch (kind) {
    case MixingKind::LMM:
      break;
    case MixingKind::GBM:
      s.sampling = ParameterSampling::PerPixel;
      break;
    case MixingKind::PNMM:
      s.b = c.experiment.pnmm_b;
      break;
    case MixingKind::MLM:
      s.sampling = ParameterSampling::PerPixel;
      s.p_max = c.experiment.mlm_p_max;
      break;
  }
  return s;
}

TrainingConfig resolved_training_config(const RunConfig& c, int bands, int endmembers) {
  TrainingConfig t = c.training;
  t.architecture.bands = bands;
  t.architecture.endmembers = endmembers;
  return t;
}

}  // namespace unmixlab
