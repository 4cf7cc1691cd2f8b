#pragma once
// File-level commands behind the gmdp CLI: generate mixtures, separate and
// scale, evaluate, and sweep (p, q). Config files are INI; manifests are
// JSON lines; reports are CSV.

#include "gmdp/pipeline.hpp"
#include "gmdp/wav.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>  // nlohmann/json, vendored

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gmdp {

namespace fs = std::filesystem;

/// Everything a config file can set. Keys left out keep these defaults.
struct ExperimentConfig {
  RunConfig run;
  MixConfig mix;
  double duration = 5.0;  // seconds of synthetic source material
  std::size_t scenarios = 1;
  std::vector<std::string> source_files;  // optional; one mono WAV per source
  std::vector<double> p_grid = make_grid(0.1, 2.0, 0.1);
  std::vector<double> q_grid = make_grid(0.1, 2.0, 0.1);
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw Error(ErrorCode::ConfigError, "key '" + key + "': expected an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  const long long i = to_int(key, v);
  if (i < 0) throw Error(ErrorCode::ConfigError, "key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(i);
}

}  // namespace detail

/// "start:stop:step" or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& spec) {
  const std::string s = detail::trim(spec);
  if (s.find(':') != std::string::npos) {
    const auto parts = detail::split(s, ':');
    if (parts.size() != 3) throw Error(ErrorCode::ConfigError, "grid '" + s + "' must be start:stop:step");
    return make_grid(detail::to_double("grid", parts[0]), detail::to_double("grid", parts[1]), detail::to_double("grid", parts[2]));
  }
  std::vector<double> g;
  for (const auto& item : detail::split(s, ',')) g.push_back(detail::to_double("grid", item));
  if (g.empty()) throw Error(ErrorCode::ConfigError, "empty grid");
  return g;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }

  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw Error(ErrorCode::ConfigError, "key '" + section + "' outside of a section");
    for (const auto& [key, node] : body) {
      const std::string v = detail::trim(node.data());
      const std::string k = section + "." + key;
      if (k == "stft.window_length") c.run.stft.window_length = detail::to_count(k, v);
      else if (k == "stft.hop") c.run.stft.hop = detail::to_count(k, v);
      else if (k == "stft.window") c.run.stft.window = parse_window(v);
      else if (k == "stft.sample_rate") c.run.stft.sample_rate = detail::to_double(k, v);
      else if (k == "auxiva.n_iters") c.run.auxiva.n_iters = static_cast<int>(detail::to_int(k, v));
      else if (k == "auxiva.weight_floor") c.run.auxiva.weight_floor = detail::to_double(k, v);
      else if (k == "scaling.method") c.run.method = parse_scaling_method(v);
      else if (k == "scaling.p") c.run.gmdp.p = detail::to_double(k, v);
      else if (k == "scaling.q") c.run.gmdp.q = detail::to_double(k, v);
      else if (k == "scaling.max_iters") c.run.gmdp.max_iters = static_cast<int>(detail::to_int(k, v));
      else if (k == "scaling.rel_tol") c.run.gmdp.rel_tol = detail::to_double(k, v);
      else if (k == "scaling.floor") c.run.gmdp.floor = detail::to_double(k, v);
      else if (k == "scaling.ref_mic") {
        const long long m = detail::to_int(k, v);
        if (m < 1) throw Error(ErrorCode::ConfigError, "scaling.ref_mic is one-based");
        c.run.ref_mic = static_cast<std::size_t>(m - 1);
      } else if (k == "mix.sources") c.mix.sources = detail::to_count(k, v);
      else if (k == "mix.mics") c.mix.mics = detail::to_count(k, v);
      else if (k == "mix.filter_length") c.mix.filter_length = detail::to_count(k, v);
      else if (k == "mix.decay") c.mix.decay = detail::to_double(k, v);
      else if (k == "mix.direct_gain") c.mix.direct_gain = detail::to_double(k, v);
      else if (k == "mix.cross_gain") c.mix.cross_gain = detail::to_double(k, v);
      else if (k == "mix.reverb_gain") c.mix.reverb_gain = detail::to_double(k, v);
      else if (k == "mix.noise_snr") c.mix.noise_snr = (v == "off" || v.empty()) ? std::nullopt : std::optional<double>(detail::to_double(k, v));
      else if (k == "mix.seed") c.mix.seed = static_cast<std::uint64_t>(detail::to_count(k, v));
      else if (k == "mix.duration") c.duration = detail::to_double(k, v);
      else if (k == "mix.scenarios") c.scenarios = detail::to_count(k, v);
      else if (k == "mix.source_files") c.source_files = detail::split(v, ',');
      else if (k == "sweep.p_grid") c.p_grid = parse_grid(v);
      else if (k == "sweep.q_grid") c.q_grid = parse_grid(v);
      else if (k == "sweep.workers") c.run.workers = static_cast<int>(detail::to_int(k, v));
      else throw Error(ErrorCode::ConfigError, "unknown config key '" + k + "'");
    }
  }
  if (c.duration <= 0.0) throw Error(ErrorCode::ConfigError, "mix.duration must be positive");
  if (c.scenarios < 1) throw Error(ErrorCode::ConfigError, "mix.scenarios must be >= 1");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Output helpers

/// Write through a temporary sibling, then rename into place.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    os << content;
    if (!os) throw Error(ErrorCode::IoError, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string fmt_num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& to_str, const char* sep = ";") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += to_str(v[i]);
  }
  return out;
}

inline nlohmann::json mix_config_json(const MixConfig& m) {
  nlohmann::json j;
  j["sources"] = m.sources;
  j["mics"] = m.mics;
  j["filter_length"] = m.filter_length;
  j["decay"] = m.decay;
  j["direct_gain"] = m.direct_gain;
  j["cross_gain"] = m.cross_gain;
  j["reverb_gain"] = m.reverb_gain;
  j["noise_snr"] = m.noise_snr ? nlohmann::json(*m.noise_snr) : nlohmann::json("off");
  j["seed"] = m.seed;
  return j;
}

// ---------------------------------------------------------------------------
// mix

struct ManifestEntry {
  std::string id;
  std::uint64_t seed = 0;
  std::uint32_t sample_rate = 16000;
  std::vector<fs::path> mixtures;             // [m], absolute
  std::vector<std::vector<fs::path>> images;  // [k][m], absolute
};

inline std::string scenario_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scn%04zu", i);
  return buf;
}

inline MultichannelSignal load_source_files(const std::vector<std::string>& files, const fs::path& base) {
  MultichannelSignal sources;
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& f : files) {
    const fs::path p = fs::path(f).is_absolute() ? fs::path(f) : base / f;
    if (!fs::exists(p)) throw Error(ErrorCode::ConfigError, "source file not found: " + p.string());
    WavData w = read_wav(p.string());
    sources.push_back(std::move(w.channels.front()));
    len = std::min(len, sources.back().size());
  }
  for (auto& s : sources) s.resize(len);
  return sources;
}

/// Writes mixtures, ground-truth images and manifest.jsonl into out_dir.
/// Scenario i uses seed mix.seed + i.
inline std::vector<ManifestEntry> cmd_mix(const ExperimentConfig& cfg, const fs::path& out_dir, const fs::path& config_dir = {}) {
  cfg.mix.validate();
  const auto rate = static_cast<std::uint32_t>(cfg.run.stft.sample_rate);
  if (!cfg.source_files.empty() && cfg.source_files.size() != cfg.mix.sources)
    throw Error(ErrorCode::ConfigError, "mix.source_files lists " + std::to_string(cfg.source_files.size()) + " files for " +
                                            std::to_string(cfg.mix.sources) + " sources");
  MultichannelSignal file_sources;
  if (!cfg.source_files.empty()) file_sources = load_source_files(cfg.source_files, config_dir);

  fs::create_directories(out_dir);
  std::vector<ManifestEntry> entries;
  std::string manifest;
  for (std::size_t i = 0; i < cfg.scenarios; ++i) {
    MixConfig mc = cfg.mix;
    mc.seed = cfg.mix.seed + i;
    const auto length = static_cast<std::size_t>(std::llround(cfg.duration * cfg.run.stft.sample_rate));
    const MultichannelSignal sources =
        file_sources.empty() ? synth_sources(mc.sources, length, cfg.run.stft.sample_rate, mc.seed) : file_sources;
    const Mixture mixed = mix(sources, mc);

    ManifestEntry e;
    e.id = scenario_id(i);
    e.seed = mc.seed;
    e.sample_rate = rate;
    const fs::path dir = out_dir / e.id;
    fs::create_directories(dir);
    nlohmann::json j;
    j["id"] = e.id;
    j["seed"] = e.seed;
    j["sample_rate"] = rate;
    j["samples"] = mixed.mixtures.front().size();
    j["config"] = mix_config_json(mc);
    j["mixtures"] = nlohmann::json::array();
    j["images"] = nlohmann::json::array();
    for (std::size_t m = 0; m < mc.mics; ++m) {
      const std::string rel = e.id + "/mix_m" + std::to_string(m + 1) + ".wav";
      write_wav((out_dir / rel).string(), {mixed.mixtures[m]}, rate);
      e.mixtures.push_back(out_dir / rel);
      j["mixtures"].push_back(rel);
    }
    for (std::size_t k = 0; k < mc.sources; ++k) {
      nlohmann::json row = nlohmann::json::array();
      e.images.emplace_back();
      for (std::size_t m = 0; m < mc.mics; ++m) {
        const std::string rel = e.id + "/image_k" + std::to_string(k + 1) + "_m" + std::to_string(m + 1) + ".wav";
        write_wav((out_dir / rel).string(), {mixed.images[k][m]}, rate);
        e.images.back().push_back(out_dir / rel);
        row.push_back(rel);
      }
      j["images"].push_back(row);
    }
    manifest += j.dump() + "\n";
    entries.push_back(std::move(e));
  }
  write_file_atomic(out_dir / "manifest.jsonl", manifest);
  return entries;
}

inline std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot read manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.sample_rate = j.at("sample_rate").get<std::uint32_t>();
      for (const auto& m : j.at("mixtures")) e.mixtures.push_back(base / m.get<std::string>());
      for (const auto& row : j.at("images")) {
        e.images.emplace_back();
        for (const auto& m : row) e.images.back().push_back(base / m.get<std::string>());
      }
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::ConfigError, path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "manifest " + path.string() + " lists no scenarios");
  return out;
}

inline std::vector<double> read_mono(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorCode::MissingReference, "missing file " + p.string());
  return read_wav(p.string()).channels.front();
}

inline Scenario load_scenario(const ManifestEntry& e, std::size_t ref_mic) {
  Scenario s;
  s.id = e.id;
  s.seed = e.seed;
  for (const auto& m : e.mixtures) s.mixtures.push_back(read_mono(m));
  if (ref_mic >= s.mixtures.size()) throw Error(ErrorCode::ConfigError, "reference microphone out of range for " + e.id);
  for (const auto& row : e.images) s.references.push_back(read_mono(row.at(ref_mic)));
  return s;
}

// ---------------------------------------------------------------------------
// separate

/// Runs separation and scaling on every manifest scenario. Writes
/// out_dir/<id>/<method>/est_k<k>.wav (images at the reference mic) and run.json.
inline void cmd_separate(const fs::path& manifest, const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  for (const auto& e : read_manifest(manifest)) {
    const Scenario s = load_scenario(e, cfg.ref_mic);
    StftConfig stft = cfg.stft;
    stft.sample_rate = e.sample_rate;
    RunConfig local = cfg;
    local.stft = stft;
    const PreparedScenario prep = prepare_scenario(s, local);
    RenderedImages r;
    try {
      r = render_images(prep, cfg.method, cfg.gmdp, cfg.ref_mic);
    } catch (const Error& ex) {
      throw Error(ex.code(), "scenario " + e.id + ": " + ex.detail());
    }
    const fs::path dir = out_dir / e.id / method_name(cfg.method);
    fs::create_directories(dir);
    nlohmann::json rec;
    rec["id"] = e.id;
    rec["seed"] = e.seed;
    rec["method"] = method_name(cfg.method);
    rec["ref_mic"] = cfg.ref_mic + 1;
    rec["references"] = fs::absolute(manifest.parent_path()).string();
    if (cfg.method == ScalingMethod::Gmdp) {
      rec["p"] = cfg.gmdp.p;
      rec["q"] = cfg.gmdp.q;
      rec["max_iters"] = cfg.gmdp.max_iters;
      rec["rel_tol"] = cfg.gmdp.rel_tol;
      rec["floor"] = cfg.gmdp.floor;
    }
    rec["auxiva_iters"] = cfg.auxiva.n_iters;
    rec["auxiva_objective"] = prep.separation.objective_trace;
    rec["iterations_used"] = r.iterations;
    rec["objective_trace"] = r.traces;
    for (std::size_t k = 0; k < r.estimates.size(); ++k)
      write_wav((dir / ("est_k" + std::to_string(k + 1) + ".wav")).string(), {r.estimates[k]}, e.sample_rate);
    write_file_atomic(dir / "run.json", rec.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// eval

inline std::string eval_csv_header() {
  return "scenario,seed,K,method,p,q,ref_mic,permutation,si_sdr,si_sir,mean_si_sdr,mean_si_sir,iterations\n";
}

/// Evaluates every <estimates_dir>/<id>/<method>/ against
/// <references_dir>/<id>/image_k<k>_m<ref>.wav. Appends one mean row per method.
inline std::string cmd_eval(const fs::path& estimates_dir, const fs::path& references_dir) {
  if (!fs::is_directory(estimates_dir)) throw Error(ErrorCode::MissingReference, "no estimates directory " + estimates_dir.string());
  std::vector<fs::path> runs;
  for (const auto& scn : fs::directory_iterator(estimates_dir)) {
    if (!scn.is_directory()) continue;
    for (const auto& m : fs::directory_iterator(scn.path()))
      if (m.is_directory() && fs::exists(m.path() / "est_k1.wav")) runs.push_back(m.path());
  }
  if (runs.empty()) throw Error(ErrorCode::MissingReference, "no estimates found under " + estimates_dir.string());
  std::sort(runs.begin(), runs.end());

  std::string csv = eval_csv_header();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_method;
  for (const auto& run : runs) {
    const std::string id = run.parent_path().filename().string();
    std::string method = run.filename().string();
    std::size_t ref_mic = 1;
    std::string seed, p, q, iters;
    if (fs::exists(run / "run.json")) {
      std::ifstream is(run / "run.json");
      const auto rec = nlohmann::json::parse(is);
      method = rec.value("method", method);
      ref_mic = rec.value("ref_mic", std::size_t{1});
      if (rec.contains("seed")) seed = std::to_string(rec["seed"].get<std::uint64_t>());
      if (rec.contains("p")) p = fmt_param(rec["p"].get<double>());
      if (rec.contains("q")) q = fmt_param(rec["q"].get<double>());
      if (rec.contains("iterations_used"))
        iters = join(rec["iterations_used"].get<std::vector<int>>(), [](int i) { return std::to_string(i); });
    }
    std::vector<std::vector<double>> est, ref;
    for (std::size_t k = 1; fs::exists(run / ("est_k" + std::to_string(k) + ".wav")); ++k) {
      est.push_back(read_mono(run / ("est_k" + std::to_string(k) + ".wav")));
      const fs::path rp = references_dir / id / ("image_k" + std::to_string(k) + "_m" + std::to_string(ref_mic) + ".wav");
      if (!fs::exists(rp)) throw Error(ErrorCode::MissingReference, "no reference " + rp.string() + " for estimate " + run.string());
      ref.push_back(read_mono(rp));
    }
    const EvalReport rep = evaluate(est, ref);
    csv += id + "," + seed + "," + std::to_string(est.size()) + "," + method + "," + p + "," + q + "," + std::to_string(ref_mic) + "," +
           join(rep.permutation, [](std::size_t i) { return std::to_string(i + 1); }) + "," +
           join(rep.si_sdr, [](double d) { return fmt_num(d); }) + "," + join(rep.si_sir, [](double d) { return fmt_num(d); }) + "," +
           fmt_num(rep.mean_si_sdr) + "," + fmt_num(rep.mean_si_sir) + "," + iters + "\n";
    per_method[method].first.push_back(rep.mean_si_sdr);
    per_method[method].second.push_back(rep.mean_si_sir);
  }
  for (const auto& [method, v] : per_method) {
    double sdr = 0.0, sir = 0.0;
    for (double d : v.first) sdr += d;
    for (double d : v.second) sir += d;
    const double n = static_cast<double>(v.first.size());
    csv += "mean,,," + method + ",,,,,,," + fmt_num(sdr / n) + "," + fmt_num(sir / n) + ",\n";
  }
  return csv;
}

// ---------------------------------------------------------------------------
// sweep

inline std::string sweep_csv_header() {
  return "method,p,q,scenarios,seeds,ref_mic,max_iters,rel_tol,floor,mean_si_sdr,mean_si_sir,median_iterations\n";
}

inline std::string sweep_csv_row(const CellResult& c, const std::vector<std::uint64_t>& seeds, const RunConfig& cfg) {
  const bool g = c.method == ScalingMethod::Gmdp;
  return std::string(method_name(c.method)) + "," + (g ? fmt_param(c.p) : "") + "," + (g ? fmt_param(c.q) : "") + "," +
         std::to_string(seeds.size()) + "," + join(seeds, [](std::uint64_t s) { return std::to_string(s); }) + "," +
         std::to_string(cfg.ref_mic + 1) + "," + (g ? std::to_string(cfg.gmdp.max_iters) : "") + "," +
         (g ? fmt_param(cfg.gmdp.rel_tol) : "") + "," + (g ? fmt_param(cfg.gmdp.floor) : "") + "," + fmt_num(c.mean_si_sdr) + "," +
         fmt_num(c.mean_si_sir) + "," + fmt_num(c.median_iterations, 1) + "\n";
}

struct SweepOutput {
  std::string csv;
  std::vector<CellResult> cells;
  std::vector<CellResult> baselines;  // pb, mdp when requested
};

/// Sweeps GMDP over the valid (p, q) pairs of the grids on prepared scenarios.
inline SweepOutput sweep_to_csv(const std::vector<PreparedScenario>& set, const std::vector<double>& p_grid,
                                const std::vector<double>& q_grid, const RunConfig& cfg, bool with_baselines) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : set) seeds.push_back(s.scenario->seed);
  SweepOutput out;
  const auto cells = valid_pairs(p_grid, q_grid);
  out.cells = sweep(set, cells, cfg.gmdp, cfg.ref_mic, cfg.workers);
  out.csv = sweep_csv_header();
  for (const auto& c : out.cells) out.csv += sweep_csv_row(c, seeds, cfg);
  if (with_baselines) {
    for (auto m : {ScalingMethod::ProjectionBack, ScalingMethod::Mdp}) {
      out.baselines.push_back(evaluate_cell(set, m, cfg.gmdp, cfg.ref_mic));
      out.csv += sweep_csv_row(out.baselines.back(), seeds, cfg);
    }
  }
  return out;
}

/// Loads the manifest scenarios, runs AuxIVA once per scenario, then sweeps.
/// Writes the CSV atomically to out_csv (when non-empty) and returns it.
inline SweepOutput cmd_sweep(const fs::path& manifest, const std::vector<double>& p_grid, const std::vector<double>& q_grid,
                             const RunConfig& cfg, const fs::path& out_csv, bool with_baselines = false) {
  RunConfig base = cfg;
  base.method = ScalingMethod::Gmdp;
  base.stft.validate();
  base.auxiva.validate();
  for (double p : p_grid)
    if (!(p > 0.0 && p <= 2.0)) throw Error(ErrorCode::ConfigError, "p grid value " + fmt_param(p) + " outside (0, 2]");
  for (double q : q_grid)
    if (!(q > 0.0 && q <= 2.0)) throw Error(ErrorCode::ConfigError, "q grid value " + fmt_param(q) + " outside (0, 2]");
  if (valid_pairs(p_grid, q_grid).empty()) std::cerr << "warning: no (p, q) pair in the grid satisfies p <= q\n";

  const auto entries = read_manifest(manifest);
  std::vector<Scenario> scenarios;
  scenarios.reserve(entries.size());
  for (const auto& e : entries) scenarios.push_back(load_scenario(e, base.ref_mic));
  std::vector<PreparedScenario> prepared;
  for (const auto& s : scenarios) prepared.push_back(prepare_scenario(s, base));

  SweepOutput out = sweep_to_csv(prepared, p_grid, q_grid, base, with_baselines);
  if (!out_csv.empty()) write_file_atomic(out_csv, out.csv);
  return out;
}

}  // namespace gmdp
