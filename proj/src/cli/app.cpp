#include "unmixlab/cli.hpp"

#include "unmixlab/baselines.hpp"
#include "unmixlab/error.hpp"
#include "unmixlab/hashing.hpp"
#include "unmixlab/png_export.hpp"
#include "unmixlab/spectra_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef UNMIXLAB_VERSION
#define UNMIXLAB_VERSION "0.0.0"
#endif

namespace unmixlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* version() { return UNMIXLAB_VERSION; }

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest start_manifest(const std::string& command, const std::string& hash, const json& config,
                           std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config_hash = hash;
  m.config = config;
  m.seed = seed;
  m.started_at = utc_now();
  return m;
}

void finish(RunManifest& m, Clock::time_point t0, const fs::path& out) {
  m.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  m.write(out);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("missing --") + what);
  if (!fs::exists(p)) throw DataError(std::string(what) + " not found: " + p.string());
}

std::string tag_provenance(const std::string& prov, const std::string& hash) {
  return prov + (prov.empty() ? "" : ";") + "config_hash=" + hash;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

void write_library_csv(const fs::path& p, const EndmemberMatrix& M, const std::string& hash) {
  std::ofstream out = open_out(p);
  out << "# config_hash=" << hash << '\n' << "wavelength";
  for (const std::string& n : M.names) out << ',' << n;
  out << '\n' << std::setprecision(17);
  const bool have_wl = static_cast<int>(M.wavelengths.size()) == M.bands();
  for (int l = 0; l < M.bands(); ++l) {
    out << (have_wl ? M.wavelengths[static_cast<std::size_t>(l)] : static_cast<double>(l));
    for (int r = 0; r < M.count(); ++r) out << ',' << M.signatures(l, r);
    out << '\n';
  }
}

void write_map_csv(const fs::path& p, const std::vector<float>& values, int height, int width,
                   const std::string& hash) {
  std::ofstream out = open_out(p);
  out << "# config_hash=" << hash << '\n' << std::setprecision(9);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      if (col) out << ',';
      out << values[static_cast<std::size_t>(row) * width + col];
    }
    out << '\n';
  }
}

std::vector<std::string> relative_names(const std::vector<fs::path>& paths, const fs::path& base) {
  std::vector<std::string> out;
  for (const fs::path& p : paths) out.push_back(fs::relative(p, base).string());
  return out;
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

std::vector<std::string> names_or_default(const AbundanceMap& a, const std::vector<std::string>& names) {
  if (!names.empty()) {
    if (static_cast<int>(names.size()) != a.endmembers())
      throw ConfigError("got " + std::to_string(names.size()) + " names for " + std::to_string(a.endmembers()) +
                        " abundance channels");
    return names;
  }
  std::vector<std::string> out;
  for (int r = 0; r < a.endmembers(); ++r) out.push_back("em" + std::to_string(r));
  return out;
}

SpectralCube synth_cube(const RunConfig& c, const AbundanceMap& a, const EndmemberMatrix& M,
                        const MixingModelSpec& spec, double snr) {
  return add_noise(mix_cube(a, M, spec), snr, noise_seed(c, spec.kind, snr));
}

std::string snr_label(double snr) {
  if (std::isinf(snr)) return "clean";
  std::ostringstream s;
  s << snr << "dB";
  return s.str();
}

// The library the run was configured with, checked against a cube's band count.
EndmemberMatrix library_for(const RunConfig& c, const SpectralCube& cube) {
  EndmemberMatrix M = load_configured_library(c);
  if (M.bands() != cube.bands())
    throw DataError("cube has " + std::to_string(cube.bands()) + " bands, library has " + std::to_string(M.bands()) +
                    " (set library.bands)");
  return M;
}

}  // namespace

// ------------------------------------------------------------ RunManifest

json RunManifest::to_json() const {
  return {{"tool", "unmixlab"},
          {"version", version()},
          {"command", command},
          {"argv", arguments},
          {"config_hash", config_hash},
          {"config", config},
          {"seed", seed},
          {"inputs", inputs},
          {"outputs", outputs},
          {"wall_clock_seconds", wall_clock_seconds},
          {"started_at", started_at}};
}

void RunManifest::write(const fs::path& dir) const {
  std::ofstream out = open_out(dir / "manifest.json");
  out << to_json().dump(2) << '\n';
}

// ------------------------------------------------------------ commands

RunManifest cmd_synth(const RunConfig& c, const SynthOptions& o) {
  const auto t0 = Clock::now();
  if (o.out.empty()) throw ConfigError("missing --out");
  ensure_dir(o.out);
  const EndmemberMatrix M = load_configured_library(c);
  AbundanceMap a = generate_abundance(c.scene);
  SpectralCube y = synth_cube(c, a, M, c.mixing, c.snr_db);
  a.provenance = tag_provenance(a.provenance, c.hash);
  y.provenance = tag_provenance(y.provenance, c.hash);

  RunManifest m = start_manifest("synth", c.hash, c.document, c.seed);
  m.inputs["library"] = c.library.path.string();
  save_cube(o.out / "cube.hsc", y);
  save_abundance(o.out / "abundance.abn", a);
  write_library_csv(o.out / "endmembers.csv", M, c.hash);
  m.outputs = {"cube.hsc", "abundance.abn", "endmembers.csv"};
  append(m.outputs, relative_names(write_abundance_pngs(o.out / "png", "truth", a, M.names, c.hash), o.out));
  finish(m, t0, o.out);
  return m;
}

RunManifest cmd_mix(const RunConfig& c, const MixOptions& o) {
  const auto t0 = Clock::now();
  require_file(o.abundance, "abundance");
  if (o.out.empty()) throw ConfigError("missing --out");
  ensure_dir(o.out);
  const EndmemberMatrix M = load_configured_library(c);
  const AbundanceMap a = load_abundance(o.abundance);
  if (a.endmembers() != M.count())
    throw DataError("abundance has " + std::to_string(a.endmembers()) + " channels, library selection has " +
                    std::to_string(M.count()));
  SpectralCube y = synth_cube(c, a, M, c.mixing, c.snr_db);
  y.provenance = tag_provenance(y.provenance, c.hash);

  RunManifest m = start_manifest("mix", c.hash, c.document, c.seed);
  m.inputs["abundance"] = o.abundance.string();
  m.inputs["library"] = c.library.path.string();
  save_cube(o.out / "cube.hsc", y);
  m.outputs = {"cube.hsc"};
  finish(m, t0, o.out);
  return m;
}

RunManifest cmd_train(const RunConfig& c, const TrainOptions& o) {
  const auto t0 = Clock::now();
  require_file(o.cube, "cube");
  if (o.out.empty()) throw ConfigError("missing --out");
  ensure_dir(o.out);
  const SpectralCube raw = load_cube(o.cube);
  const EndmemberMatrix M = library_for(c, raw);
  const NormalizedCube n = normalize_cube(raw);
  if (n.constant_input) throw DataError("cube is constant; nothing to learn");
  const Eigen::MatrixXd Mn = to_normalized_units(M.signatures, n.offset, n.scale);

  TrainHooks hooks;
  hooks.log_path = o.out / "training_log.csv";
  TrainingResult r = train(n.cube, Mn, resolved_training_config(c, M.bands(), M.count()), hooks);
  save_state(o.out / "model", r.state);

  RunManifest m = start_manifest("train", r.state.config_hash, c.document, c.seed);
  m.inputs["cube"] = o.cube.string();
  m.inputs["library"] = c.library.path.string();
  m.outputs = {"model", "training_log.csv"};
  finish(m, t0, o.out);
  return m;
}

RunManifest cmd_unmix(const RunConfig& c, const UnmixOptions& o) {
  const auto t0 = Clock::now();
  require_file(o.model, "model");
  require_file(o.cube, "cube");
  if (o.out.empty()) throw ConfigError("missing --out");
  const SpectralCube raw = load_cube(o.cube);
  const EndmemberMatrix M = library_for(c, raw);
  const std::string expected = json_hash(to_json(resolved_training_config(c, M.bands(), M.count())));
  const LcguState state = load_state(o.model);
  if (state.config_hash != expected)
    throw ConfigError("checkpoint config hash " + state.config_hash + " does not match this config (" + expected +
                      ")");
  ensure_dir(o.out);
  const NormalizedCube n = normalize_cube(raw);
  AbundanceMap a = unmix_cube(n.cube, state.model.endmembers(), state);
  a.provenance = tag_provenance(a.provenance, state.config_hash);

  RunManifest m = start_manifest("unmix", state.config_hash, c.document, c.seed);
  m.inputs["model"] = o.model.string();
  m.inputs["cube"] = o.cube.string();
  save_abundance(o.out / "abundance.abn", a);
  m.outputs = {"abundance.abn"};
  append(m.outputs, relative_names(write_abundance_pngs(o.out / "png", "lcgu", a, M.names, state.config_hash), o.out));
  finish(m, t0, o.out);
  return m;
}

RunManifest cmd_baseline(const BaselineOptions& o) {
  const auto t0 = Clock::now();
  const BaselineMethod method = parse_baseline_method(o.method);
  require_file(o.cube, "cube");
  require_file(o.endmembers, "endmembers");
  if (o.out.empty()) throw ConfigError("missing --out");
  const std::vector<std::string> names = o.names.empty() ? library_names(o.endmembers) : o.names;
  const EndmemberMatrix M = load_endmember_library(o.endmembers, names);
  const SpectralCube y = load_cube(o.cube);
  if (M.bands() != y.bands())
    throw DataError("cube has " + std::to_string(y.bands()) + " bands, endmembers have " + std::to_string(M.bands()));

  const json doc = {{"method", to_string(method)},
                    {"cube", fs::absolute(o.cube).string()},
                    {"endmembers", fs::absolute(o.endmembers).string()},
                    {"names", names}};
  const std::string hash = json_hash(doc);
  ensure_dir(o.out);
  FitResult fit = run_baseline(method, y, M.signatures);
  fit.abundance.provenance = tag_provenance(to_string(method), hash);

  RunManifest m = start_manifest("baseline", hash, doc, 0);
  m.inputs["cube"] = o.cube.string();
  m.inputs["endmembers"] = o.endmembers.string();
  save_abundance(o.out / "abundance.abn", fit.abundance);
  write_map_csv(o.out / "residual.csv", fit.residual, y.height(), y.width(), hash);
  m.outputs = {"abundance.abn", "residual.csv"};
  if (fit.nonlinearity) {
    write_map_csv(o.out / "nonlinearity.csv", *fit.nonlinearity, y.height(), y.width(), hash);
    m.outputs.push_back("nonlinearity.csv");
  }
  append(m.outputs,
         relative_names(write_abundance_pngs(o.out / "png", to_string(method), fit.abundance, M.names, hash), o.out));
  finish(m, t0, o.out);
  return m;
}

EvalReport cmd_eval_pair(const EvalOptions& o, RunManifest* manifest) {
  const auto t0 = Clock::now();
  require_file(o.truth, "truth");
  require_file(o.estimate, "estimate");
  const AbundanceMap truth = load_abundance(o.truth);
  const AbundanceMap est = load_abundance(o.estimate);
  if (!truth.same_shape(est)) throw DataError("truth and estimate abundance shapes differ");
  EvalReport rep = evaluate_abundance(truth, est, names_or_default(truth, o.names));

  json doc = {{"truth", fs::absolute(o.truth).string()}, {"estimate", fs::absolute(o.estimate).string()}};
  if (!o.cube.empty()) {
    require_file(o.cube, "cube");
    require_file(o.endmembers, "endmembers");
    const std::vector<std::string> names = o.names.empty() ? library_names(o.endmembers) : o.names;
    const EndmemberMatrix M = load_endmember_library(o.endmembers, names);
    const SpectralCube y = load_cube(o.cube);
    if (M.count() != est.endmembers() || M.bands() != y.bands())
      throw DataError("cube, endmembers and estimate do not agree in shape");
    const SpectralCube y_hat = reconstruct_linear(est, M.signatures);
    rep.re = re(y, y_hat);
    rep.sad = sad(y, y_hat);
    doc["cube"] = fs::absolute(o.cube).string();
    doc["endmembers"] = fs::absolute(o.endmembers).string();
  }

  if (!o.out.empty()) {
    const std::string hash = json_hash(doc);
    ensure_dir(o.out);
    RunManifest m = start_manifest("eval", hash, doc, 0);
    m.inputs["truth"] = o.truth.string();
    m.inputs["estimate"] = o.estimate.string();
    if (!o.cube.empty()) m.inputs["cube"] = o.cube.string();
    json report = json::parse(rep.to_json());
    report["config_hash"] = hash;
    open_out(o.out / "metrics.json") << report.dump(2) << '\n';
    open_out(o.out / "metrics.csv") << "# config_hash=" << hash << '\n'
                                    << EvalReport::csv_header() << '\n'
                                    << rep.csv_row() << '\n';
    m.outputs = {"metrics.json", "metrics.csv"};
    finish(m, t0, o.out);
    if (manifest) *manifest = m;
  }
  return rep;
}

std::string matrix_column(MixingKind kind, double snr_db) { return to_string(kind) + "@" + snr_label(snr_db); }

MatrixResult cmd_eval_matrix(const RunConfig& c, const fs::path& out) {
  const auto t0 = Clock::now();
  if (out.empty()) throw ConfigError("missing --out");
  ensure_dir(out);
  const EndmemberMatrix M = load_configured_library(c);
  const AbundanceMap truth = generate_abundance(c.scene);

  MatrixResult res;
  res.methods = c.experiment.methods;
  for (MixingKind k : c.experiment.models)
    for (double snr : c.experiment.snr_db) res.columns.push_back(matrix_column(k, snr));
  const std::size_t nm = res.methods.size(), nc = res.columns.size();
  res.aad.assign(nm, std::vector<double>(nc, std::nan("")));
  res.aid.assign(nm, std::vector<double>(nc, std::nan("")));

  res.manifest = start_manifest("eval", c.hash, c.document, c.seed);
  RunManifest& m = res.manifest;
  m.inputs["library"] = c.library.path.string();
  append(m.outputs, relative_names(write_abundance_pngs(out / "png", "truth", truth, M.names, c.hash), out));

  auto record = [&](std::size_t method, std::size_t column, const AbundanceMap& est) {
    res.aad[method][column] = aad(truth, est);
    res.aid[method][column] = aid(truth, est);
    const std::string stem = res.methods[method] + "_" + res.columns[column];
    append(m.outputs, relative_names(write_abundance_pngs(out / "png", stem, est, M.names, c.hash), out));
  };

  for (std::size_t s = 0; s < c.experiment.snr_db.size(); ++s) {
    const double snr = c.experiment.snr_db[s];
    std::optional<LcguState> lcgu;
    for (std::size_t meth = 0; meth < nm; ++meth) {
      if (res.methods[meth] != "lcgu") continue;
      const SpectralCube y = synth_cube(c, truth, M, experiment_mixing_spec(c, c.experiment.train_model), snr);
      const NormalizedCube n = normalize_cube(y);
      const Eigen::MatrixXd Mn = to_normalized_units(M.signatures, n.offset, n.scale);
      lcgu = train(n.cube, Mn, resolved_training_config(c, M.bands(), M.count())).state;
    }
    for (std::size_t k = 0; k < c.experiment.models.size(); ++k) {
      const MixingKind kind = c.experiment.models[k];
      const std::size_t col = k * c.experiment.snr_db.size() + s;
      const SpectralCube y = synth_cube(c, truth, M, experiment_mixing_spec(c, kind), snr);
      for (std::size_t meth = 0; meth < nm; ++meth) {
        const std::string& name = res.methods[meth];
        if (name == "lcgu") {
          const NormalizedCube n = normalize_cube(y);
          record(meth, col, unmix_cube(n.cube, lcgu->model.endmembers(), *lcgu));
        } else {
          record(meth, col, run_baseline(parse_baseline_method(name), y, M.signatures).abundance);
        }
      }
    }
  }

  auto write_matrix = [&](const char* file, const std::vector<std::vector<double>>& v) {
    std::ofstream f = open_out(out / file);
    f << "# config_hash=" << c.hash << '\n' << "method";
    for (const std::string& col : res.columns) f << ',' << col;
    f << '\n' << std::setprecision(6);
    for (std::size_t i = 0; i < nm; ++i) {
      f << res.methods[i];
      for (double x : v[i]) f << ',' << x;
      f << '\n';
    }
    m.outputs.emplace_back(file);
  };
  write_matrix("aad_matrix.csv", res.aad);
  write_matrix("aid_matrix.csv", res.aid);
  finish(m, t0, out);
  return res;
}

// ------------------------------------------------------------ entry point

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperspectral unmixing toolkit", "unmixlab"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  fs::path config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", config_path, "run config JSON (or a run manifest)");
    if (required) opt->required();
    sub->add_option("--set", overrides, "override a config key, e.g. --set scene.height=64");
  };

  SynthOptions synth;
  auto* s_synth = app.add_subcommand("synth", "simulate a scene: cube, ground-truth abundance, PNGs");
  add_config(s_synth, true);
  s_synth->add_option("--out", synth.out)->required();

  MixOptions mix;
  auto* s_mix = app.add_subcommand("mix", "mix an abundance file with the configured model");
  add_config(s_mix, true);
  s_mix->add_option("--abundance", mix.abundance)->required();
  s_mix->add_option("--out", mix.out)->required();

  TrainOptions tr;
  auto* s_train = app.add_subcommand("train", "train the LCGU networks on a cube");
  add_config(s_train, true);
  s_train->add_option("--cube", tr.cube)->required();
  s_train->add_option("--out", tr.out)->required();

  UnmixOptions um;
  auto* s_unmix = app.add_subcommand("unmix", "unmix a cube with a trained checkpoint");
  add_config(s_unmix, true);
  s_unmix->add_option("--model", um.model, "checkpoint directory (<train out>/model)")->required();
  s_unmix->add_option("--cube", um.cube)->required();
  s_unmix->add_option("--out", um.out)->required();

  BaselineOptions bl;
  auto* s_base = app.add_subcommand("baseline", "classical per-pixel unmixing");
  s_base->add_option("--method", bl.method)->required()->check(CLI::IsMember({"fcls", "ppnm", "mlm"}));
  s_base->add_option("--cube", bl.cube)->required();
  s_base->add_option("--endmembers", bl.endmembers, "endmember CSV")->required();
  s_base->add_option("--names", bl.names, "endmember columns to use (default: all)");
  s_base->add_option("--out", bl.out)->required();

  EvalOptions ev;
  auto* s_eval = app.add_subcommand("eval", "metrics for one estimate, or the cross-model matrix with --config");
  add_config(s_eval, false);
  s_eval->add_option("--truth", ev.truth);
  s_eval->add_option("--estimate", ev.estimate);
  s_eval->add_option("--cube", ev.cube);
  s_eval->add_option("--endmembers", ev.endmembers);
  s_eval->add_option("--names", ev.names);
  s_eval->add_option("--out", ev.out);

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    RunManifest m;
    fs::path out_dir;
    auto config = [&] { return load_run_config(config_path, overrides); };
    if (s_synth->parsed()) {
      m = cmd_synth(config(), synth);
      out_dir = synth.out;
    } else if (s_mix->parsed()) {
      m = cmd_mix(config(), mix);
      out_dir = mix.out;
    } else if (s_train->parsed()) {
      m = cmd_train(config(), tr);
      out_dir = tr.out;
    } else if (s_unmix->parsed()) {
      m = cmd_unmix(config(), um);
      out_dir = um.out;
    } else if (s_base->parsed()) {
      m = cmd_baseline(bl);
      out_dir = bl.out;
    } else if (!config_path.empty()) {
      if (!ev.truth.empty() || !ev.estimate.empty())
        throw ConfigError("eval takes either --config (matrix) or --truth/--estimate, not both");
      const MatrixResult r = cmd_eval_matrix(config(), ev.out);
      m = r.manifest;
      out_dir = ev.out;
    } else {
      const EvalReport rep = cmd_eval_pair(ev, &m);
      if (!ev.out.empty()) {
        m.arguments = args;
        m.write(ev.out);
      }
      out << rep.to_json() << '\n';
      return kExitOk;
    }
    m.arguments = args;
    m.write(out_dir);
    out << "wrote " << m.outputs.size() << " files; config_hash=" << m.config_hash << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace unmixlab::cli
