#include "gmdp/commands.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace gmdp;

namespace {

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "expected gmdp::Error";
  return ErrorCode::IoError;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "gmdp_cmd_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) { return tutil::rel_err(a, b); }

ExperimentConfig small_config(double seconds = 2.0) {
  ExperimentConfig c;
  c.duration = seconds;
  c.mix.seed = 7;
  c.run.auxiva.n_iters = 30;
  return c;
}

std::vector<std::string> csv_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

// --- config -----------------------------------------------------------------------

TEST(Config, DefaultsFollowTheProtocol) {
  const auto c = parse_config_text("");
  EXPECT_EQ(c.run.gmdp.max_iters, 100);
  EXPECT_DOUBLE_EQ(c.run.gmdp.rel_tol, 0.01);
  EXPECT_EQ(c.run.ref_mic, 0u);
  EXPECT_EQ(c.run.auxiva.n_iters, 50);
  EXPECT_EQ(c.run.method, ScalingMethod::Gmdp);
  EXPECT_EQ(c.p_grid.size(), 20u);
  EXPECT_DOUBLE_EQ(c.p_grid.front(), 0.1);
  EXPECT_DOUBLE_EQ(c.p_grid.back(), 2.0);
}

TEST(Config, ParsesSections) {
  const auto c = parse_config_text(
      "[stft]\nwindow_length = 1024\nhop = 256\nwindow = hann\n"
      "[scaling]\nmethod = mdp\np = 0.4\nq = 0.8\nref_mic = 2\n"
      "[mix]\nsources = 3\nmics = 3\nnoise_snr = 30\nseed = 11\nscenarios = 4\n"
      "[sweep]\np_grid = 0.5, 1.0\nq_grid = 1:2:0.5\nworkers = 2\n");
  EXPECT_EQ(c.run.stft.window_length, 1024u);
  EXPECT_EQ(c.run.stft.window, WindowKind::Hann);
  EXPECT_EQ(c.run.method, ScalingMethod::Mdp);
  EXPECT_DOUBLE_EQ(c.run.gmdp.q, 0.8);
  EXPECT_EQ(c.run.ref_mic, 1u);
  EXPECT_EQ(c.mix.sources, 3u);
  ASSERT_TRUE(c.mix.noise_snr.has_value());
  EXPECT_DOUBLE_EQ(*c.mix.noise_snr, 30.0);
  EXPECT_EQ(c.scenarios, 4u);
  EXPECT_EQ(c.p_grid, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(c.q_grid, (std::vector<double>{1.0, 1.5, 2.0}));
  EXPECT_EQ(c.run.workers, 2);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  std::string msg;
  EXPECT_EQ(code_of([] { parse_config_text("[scaling]\nalpha = 1\n"); }, &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("scaling.alpha"), std::string::npos);
  EXPECT_EQ(code_of([] { parse_config_text("[scaling]\np = abc\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config_text("[scaling]\nref_mic = 0\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config_text("[scaling]\nmethod = ica\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/gmdp.ini"); }), ErrorCode::ConfigError);
}

// --- mix ---------------------------------------------------------------------------

TEST(CmdMix, WritesMixturesImagesAndManifest) {
  const fs::path out = scratch("mix_shape");
  const auto entries = cmd_mix(small_config(1.0), out);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].seed, 7u);
  for (const char* f : {"mix_m1.wav", "mix_m2.wav", "image_k1_m1.wav", "image_k1_m2.wav", "image_k2_m1.wav", "image_k2_m2.wav"})
    EXPECT_TRUE(fs::exists(out / "scn0000" / f)) << f;
  std::size_t wavs = 0;
  for (const auto& f : fs::directory_iterator(out / "scn0000")) wavs += f.path().extension() == ".wav";
  EXPECT_EQ(wavs, 6u);

  const auto back = read_manifest(out / "manifest.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].id, "scn0000");
  EXPECT_EQ(back[0].images.size(), 2u);
  const auto j = nlohmann::json::parse(csv_lines(slurp(out / "manifest.jsonl"))[0]);
  EXPECT_EQ(j["config"]["seed"], 7);
  EXPECT_EQ(j["samples"], 16000);
}

TEST(CmdMix, MixtureEqualsSumOfImagesOnDisk) {
  const fs::path out = scratch("mix_sum");
  cmd_mix(small_config(1.0), out);
  const auto x = read_mono(out / "scn0000" / "mix_m1.wav");
  const auto a = read_mono(out / "scn0000" / "image_k1_m1.wav"), b = read_mono(out / "scn0000" / "image_k2_m1.wav");
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(x[t], a[t] + b[t], 1e-6 * (1.0 + std::abs(x[t])));
}

TEST(CmdMix, RepeatIsByteIdentical) {
  auto cfg = small_config(1.0);
  cfg.scenarios = 2;
  const fs::path a = scratch("mix_rep_a"), b = scratch("mix_rep_b");
  cmd_mix(cfg, a);
  cmd_mix(cfg, b);
  std::size_t compared = 0;
  for (const auto& f : fs::recursive_directory_iterator(a)) {
    if (!f.is_regular_file()) continue;
    const fs::path rel = fs::relative(f.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(f.path()), slurp(b / rel)) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 13u);  // 2 x 6 WAVs + manifest
}

TEST(CmdMix, MissingSourceFileNamesThePath) {
  auto cfg = small_config(1.0);
  cfg.source_files = {"voices/alice.wav", "voices/bob.wav"};
  std::string msg;
  EXPECT_EQ(code_of([&] { cmd_mix(cfg, scratch("mix_missing"), "/tmp/gmdp-no-such-dir"); }, &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("voices/alice.wav"), std::string::npos) << msg;
}

// --- separate -------------------------------------------------------------------------

// Identity mixing of time-disjoint sources: the sources are exactly
// uncorrelated, AuxIVA keeps W diagonal, and PB coincides with MDP.
TEST(CmdSeparate, PbMatchesMdpOnOrthogonalSources) {
  const fs::path dir = scratch("sep_orth");
  const std::size_t T = 16000 * 3;
  auto s1 = synth_source(T, 16000.0, 101), s2 = synth_source(T, 16000.0, 202);
  for (std::size_t t = 0; t < T; ++t) {
    if (t >= 16000) s1[t] = 0.0;
    if (t < 24000 || t >= 40000) s2[t] = 0.0;
  }
  write_wav((dir / "s1.wav").string(), {s1}, 16000);
  write_wav((dir / "s2.wav").string(), {s2}, 16000);

  auto cfg = small_config();
  cfg.source_files = {"s1.wav", "s2.wav"};
  cfg.mix.filter_length = 1;
  cfg.mix.cross_gain = 0.0;
  cfg.mix.reverb_gain = 0.0;
  // With exact silence the default floor makes the weights ~1e10 and the
  // (still diagonal) covariances numerically singular.
  cfg.run.auxiva.weight_floor = 1e-2;
  cmd_mix(cfg, dir / "mix", dir);

  RunConfig run = cfg.run;
  run.method = ScalingMethod::ProjectionBack;
  cmd_separate(dir / "mix" / "manifest.jsonl", run, dir / "est");
  run.method = ScalingMethod::Mdp;
  cmd_separate(dir / "mix" / "manifest.jsonl", run, dir / "est");
  for (const char* k : {"est_k1.wav", "est_k2.wav"}) {
    const auto pb = read_mono(dir / "est" / "scn0000" / "pb" / k);
    const auto md = read_mono(dir / "est" / "scn0000" / "mdp" / k);
    EXPECT_LE(rel_err(pb, md), 1e-6) << k;
  }
}

TEST(CmdSeparate, GmdpAtTwoTwoMatchesMdpAndRecordsIterations) {
  const fs::path dir = scratch("sep_reduce");
  cmd_mix(small_config(), dir / "mix");
  RunConfig run = small_config().run;
  run.method = ScalingMethod::Mdp;
  cmd_separate(dir / "mix" / "manifest.jsonl", run, dir / "est");
  run.method = ScalingMethod::Gmdp;
  run.gmdp.p = 2.0;
  run.gmdp.q = 2.0;
  cmd_separate(dir / "mix" / "manifest.jsonl", run, dir / "est");
  for (const char* k : {"est_k1.wav", "est_k2.wav"})
    EXPECT_LE(rel_err(read_mono(dir / "est" / "scn0000" / "gmdp" / k), read_mono(dir / "est" / "scn0000" / "mdp" / k)), 1e-8) << k;

  run.gmdp.p = 0.8;
  run.gmdp.q = 1.9;
  cmd_separate(dir / "mix" / "manifest.jsonl", run, dir / "est");
  std::ifstream is(dir / "est" / "scn0000" / "gmdp" / "run.json");
  const auto rec = nlohmann::json::parse(is);
  EXPECT_EQ(rec["method"], "gmdp");
  EXPECT_EQ(rec["ref_mic"], 1);
  EXPECT_DOUBLE_EQ(rec["p"].get<double>(), 0.8);
  const auto iters = rec["iterations_used"].get<std::vector<int>>();
  ASSERT_EQ(iters.size(), 2u);
  for (int i : iters) {
    EXPECT_GE(i, 1);
    EXPECT_LE(i, 100);
  }
  const auto traces = rec["objective_trace"].get<std::vector<std::vector<double>>>();
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(traces[k].size(), static_cast<std::size_t>(iters[k]) + 1);
    for (std::size_t t = 1; t < traces[k].size(); ++t) EXPECT_LE(traces[k][t], traces[k][t - 1] * (1.0 + 1e-10));
  }
}

// --- eval ---------------------------------------------------------------------------------

TEST(CmdEval, ReferencesScoreAtCapAndPlantedPermutationShows) {
  const fs::path dir = scratch("eval");
  cmd_mix(small_config(1.0), dir / "mix");
  const fs::path scn = dir / "mix" / "scn0000";
  fs::create_directories(dir / "est" / "scn0000" / "oracle");
  fs::create_directories(dir / "est" / "scn0000" / "swapped");
  fs::copy_file(scn / "image_k1_m1.wav", dir / "est" / "scn0000" / "oracle" / "est_k1.wav");
  fs::copy_file(scn / "image_k2_m1.wav", dir / "est" / "scn0000" / "oracle" / "est_k2.wav");
  fs::copy_file(scn / "image_k2_m1.wav", dir / "est" / "scn0000" / "swapped" / "est_k1.wav");
  fs::copy_file(scn / "image_k1_m1.wav", dir / "est" / "scn0000" / "swapped" / "est_k2.wav");

  const auto lines = csv_lines(cmd_eval(dir / "est", dir / "mix"));
  ASSERT_EQ(lines.size(), 5u);  // header, 2 rows, 2 mean rows
  EXPECT_EQ(lines[0], "scenario,seed,K,method,p,q,ref_mic,permutation,si_sdr,si_sir,mean_si_sdr,mean_si_sir,iterations");
  const auto oracle = csv_fields(lines[1]), swapped = csv_fields(lines[2]);
  EXPECT_EQ(oracle[3], "oracle");
  EXPECT_EQ(oracle[7], "1;2");
  EXPECT_EQ(oracle[10], fmt_num(kMetricCapDb));
  EXPECT_EQ(swapped[3], "swapped");
  EXPECT_EQ(swapped[7], "2;1");
  EXPECT_EQ(swapped[8], fmt_num(kMetricCapDb) + ";" + fmt_num(kMetricCapDb));
  EXPECT_EQ(csv_fields(lines[3])[0], "mean");
}

TEST(CmdEval, EmptyEstimatesDirectory) {
  const fs::path dir = scratch("eval_empty");
  EXPECT_EQ(code_of([&] { cmd_eval(dir, dir); }), ErrorCode::MissingReference);
  EXPECT_EQ(code_of([&] { cmd_eval(dir / "nope", dir); }), ErrorCode::MissingReference);
}

// --- sweep -----------------------------------------------------------------------------------

TEST(CmdSweep, TwoTwoCellEqualsMdpBaseline) {
  const fs::path dir = scratch("sweep_reduce");
  cmd_mix(small_config(), dir / "mix");
  const auto res = cmd_sweep(dir / "mix" / "manifest.jsonl", {2.0}, {2.0}, small_config().run, dir / "sweep.csv", true);
  const auto lines = csv_lines(slurp(dir / "sweep.csv"));
  ASSERT_EQ(lines.size(), 4u);  // header, gmdp, pb, mdp
  const auto g = csv_fields(lines[1]), m = csv_fields(lines[3]);
  EXPECT_EQ(g[0], "gmdp");
  EXPECT_EQ(g[1], "2");
  EXPECT_EQ(m[0], "mdp");
  EXPECT_EQ(g[9], m[9]);
  EXPECT_EQ(g[10], m[10]);
  EXPECT_EQ(g[11], "1.0");
  EXPECT_EQ(g[4], "7");
}

TEST(CmdSweep, OnlyInvalidPairsGivesHeaderOnly) {
  const fs::path dir = scratch("sweep_empty");
  cmd_mix(small_config(1.0), dir / "mix");
  const auto res = cmd_sweep(dir / "mix" / "manifest.jsonl", {1.5, 1.8}, {1.0}, small_config().run, dir / "sweep.csv");
  EXPECT_EQ(slurp(dir / "sweep.csv"), sweep_csv_header());
  EXPECT_EQ(code_of([&] { cmd_sweep(dir / "mix" / "manifest.jsonl", {0.0}, {1.0}, small_config().run, {}); }), ErrorCode::ConfigError);
}

TEST(CmdSweep, RepeatIsByteIdenticalAcrossWorkerCounts) {
  const fs::path dir = scratch("sweep_det");
  auto cfg = small_config();
  cfg.scenarios = 2;
  cmd_mix(cfg, dir / "mix");
  RunConfig run = cfg.run;
  const std::vector<double> grid{0.5, 1.0, 2.0};
  cmd_sweep(dir / "mix" / "manifest.jsonl", grid, grid, run, dir / "a.csv", true);
  run.workers = 3;
  cmd_sweep(dir / "mix" / "manifest.jsonl", grid, grid, run, dir / "b.csv", true);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(csv_lines(slurp(dir / "a.csv")).size(), 1u + 6u + 2u);
}

// --- binary --------------------------------------------------------------------------------------

TEST(Cli, EndToEndSmoke) {
  const fs::path dir = scratch("cli");
  {
    std::ofstream os(dir / "exp.ini");
    os << "[mix]\nduration = 1.5\nseed = 3\n[auxiva]\nn_iters = 20\n";
  }
  const std::string cli = GMDP_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const std::string d = "\"" + dir.string();
  ASSERT_EQ(run("mix --config " + d + "/exp.ini\" --out " + d + "/mix\""), 0) << slurp(dir / "log.txt");
  ASSERT_EQ(run("separate " + d + "/mix/manifest.jsonl\" --config " + d + "/exp.ini\" --method gmdp --p 0.8 --q 1.9 --out " + d + "/est\""), 0)
      << slurp(dir / "log.txt");
  ASSERT_EQ(run("eval " + d + "/est\" " + d + "/mix\" --out " + d + "/eval.csv\""), 0) << slurp(dir / "log.txt");
  EXPECT_EQ(csv_lines(slurp(dir / "eval.csv")).size(), 3u);
  ASSERT_EQ(run("sweep " + d + "/mix/manifest.jsonl\" --config " + d + "/exp.ini\" --p-grid 1,2 --q-grid 2 --baselines --out " + d +
                "/sweep.csv\""),
            0)
      << slurp(dir / "log.txt");
  EXPECT_EQ(csv_lines(slurp(dir / "sweep.csv")).size(), 5u);

  EXPECT_EQ(run("separate " + d + "/missing.jsonl\" --out " + d + "/x\""), 2);
  EXPECT_NE(run("separate " + d + "/mix/manifest.jsonl\" --method ica --out " + d + "/x\""), 0);
}
