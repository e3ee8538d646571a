#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "binspp/binspp.hpp"
#include "binspp/random.hpp"

namespace fs = std::filesystem;
using namespace binspp;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kIo = 1, kValidation = 2, kNumerical = 3 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotFound:
    case ErrorCode::Io:
    case ErrorCode::CorruptFile:
    case ErrorCode::UnsupportedFormat:
      return kIo;
    case ErrorCode::DivergedLoss:
      return kNumerical;
    default:
      return kValidation;
  }
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

RunConfig load_config(const Globals& g) {
  RunConfig rc = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.seed) rc.model.seed = *g.seed;
  if (!g.out_dir.empty()) rc.out_dir = g.out_dir;
  if (rc.out_dir.empty()) rc.out_dir = ".";
  return rc;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::NotFound, path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string matrix_csv(const RealMatrix& m) {
  std::string out;
  for (std::size_t c = 0; c < m.cols(); ++c) out += (c ? ",l" : "l") + std::to_string(c);
  out += '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, c ? ",%.9g" : "%.9g", m(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

unsigned default_workers(const RunConfig& rc) {
  return rc.workers > 1 ? rc.workers : std::max(1u, std::thread::hardware_concurrency());
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  std::size_t utterances = 20;
  double seconds = 10.0;
  double noise_stddev = 0.05;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  const RunConfig rc = load_config(g);
  SynthConfig sc;
  sc.utterances = a.utterances;
  sc.seconds = a.seconds;
  sc.seed = rc.model.seed;
  const fs::path root = ensure_dir(rc.out_dir);
  const fs::path clean_dir = ensure_dir((root / "clean").string());
  const fs::path noise_dir = ensure_dir((root / "noise").string());
  const auto samples = static_cast<std::size_t>(a.seconds * kSampleRate);
  for (std::size_t i = 0; i < a.utterances; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "utt%03zu.wav", i);
    write_wav(clean_dir / name, tone_burst_speech(sc, derive_seed(sc.seed, 2 * i)));
    std::snprintf(name, sizeof name, "noise%03zu.wav", i);
    write_wav(noise_dir / name,
              white_noise(samples + kSampleRate / 2, a.noise_stddev, derive_seed(sc.seed, 2 * i + 1)));
  }
  std::printf("wrote %zu clean and %zu noise files under %s\n", a.utterances, a.utterances,
              root.string().c_str());
  return kOk;
}

// --- mix ---------------------------------------------------------------------

struct MixArgs {
  std::string clean_dir, noise_dir, name = "manifest";
  double snr_min = -5.0, snr_max = 25.0;
};

int cmd_mix(const Globals& g, const MixArgs& a) {
  const RunConfig rc = load_config(g);
  auto m = build_manifest(a.clean_dir, a.noise_dir, a.snr_min, a.snr_max, rc.model.seed);
  const fs::path root = ensure_dir(rc.out_dir);
  const fs::path wav_dir = ensure_dir((root / (a.name + "_wav")).string());
  for (auto& e : m.entries) {
    const auto mix = mix_at_snr(read_wav(e.clean), read_wav(e.noise), e.mix.snr_db, e.mix.seed);
    const auto stem = e.mix.clean_id + "_" + e.mix.noise_id;
    const auto noisy = fs::absolute(wav_dir / (stem + "_noisy.wav"));
    const auto noise = fs::absolute(wav_dir / (stem + "_noise.wav"));
    write_wav(noisy, mix.noisy);
    write_wav(noise, mix.scaled_noise);
    e.noisy = noisy.string();
    e.scaled_noise = noise.string();
    e.mix.gain = mix.gain;
    e.mix.clean_scale = mix.clean_scale;
  }
  const auto path = root / (a.name + ".json");
  save_manifest(path, m);
  std::printf("mixed %zu utterances; manifest %s\n", m.entries.size(), path.string().c_str());
  return kOk;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string manifest, kind, name = "model";
  std::optional<std::size_t> neighbors;
  std::optional<int> epochs;
  std::optional<unsigned> workers;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  RunConfig rc = load_config(g);
  if (!a.kind.empty()) rc.model.kind = model_kind_from_string(a.kind);
  if (a.neighbors) rc.model.neighbors = *a.neighbors;
  if (a.epochs) rc.model.epochs = *a.epochs;
  if (a.workers) rc.workers = *a.workers;
  rc.model = rc.model.resolved();
  rc.validate();

  const auto manifest = load_manifest(a.manifest);
  const fs::path root = ensure_dir(rc.out_dir);
  const TrainOptions opts{default_workers(rc), {}};
  const auto result = rc.model.kind == ModelKind::Binwise
                          ? train_binwise(manifest, rc.model, rc.target, opts)
                          : train_typical(manifest, rc.model, rc.target, opts);

  const auto bundle_path = root / (a.name + ".json");
  save_bundle(result.bundle, bundle_path);
  std::string loss = "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", e + 1, result.epoch_loss[e]);
    loss += buf;
  }
  write_text(root / (a.name + "_loss.csv"), loss);
  std::printf("trained %s model: %zu parameters, %zu MACs/frame, loss %.6g -> %.6g; bundle %s\n",
              to_string(rc.model.kind).c_str(), count_params(result.bundle),
              count_macs_per_frame(result.bundle), result.initial_loss,
              result.epoch_loss.empty() ? result.initial_loss : result.epoch_loss.back(),
              bundle_path.string().c_str());
  return kOk;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string manifest, estimator = "bundle", model, name;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const RunConfig rc = load_config(g);
  rc.validate();
  const auto manifest = load_manifest(a.manifest);
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyManifest, a.manifest);

  std::optional<ModelBundle> bundle;
  if (a.estimator == "bundle") {
    if (a.model.empty()) throw Error(ErrorCode::InvalidConfig, "--model is required for the bundle estimator");
    bundle = load_bundle(a.model);
  } else if (a.estimator != "unbiased" && a.estimator != "oracle") {
    throw Error(ErrorCode::InvalidConfig, "unknown estimator '" + a.estimator + "'");
  }

  std::vector<SppMatrix> scores;
  std::vector<LabelMatrix> labels;
  for (const auto& e : manifest.entries) {
    const auto mix = realize_entry(e);
    const auto noisy = power_spec(stft(mix.noisy));
    labels.push_back(ground_truth_labels(power_spec(stft(mix.clean), PowerRole::Clean)));
    if (bundle) {
      scores.push_back(infer(*bundle, mix.noisy));
    } else if (a.estimator == "unbiased") {
      scores.push_back(unbiased_mmse_spp(noisy, rc.baseline).spp);
    } else {
      const auto noise = power_spec(stft(mix.scaled_noise), PowerRole::Noise);
      scores.push_back(oracle_spp(noisy, smooth_noise_psd(noise, rc.target.noise_smoothing), rc.target));
    }
  }

  std::string name = a.name;
  if (name.empty()) name = bundle ? to_string(bundle->config.kind) : a.estimator;
  json fp = run_config_to_json(rc);
  fp["estimator"] = a.estimator;
  if (bundle) fp["bundle_checksum"] = bundle_checksum(*bundle);
  EstimatorInfo info{name, fs::path(a.manifest).stem().string(), config_fingerprint(fp),
                     bundle ? count_params(*bundle) : 0, bundle ? count_macs_per_frame(*bundle) : 0};
  auto ev = evaluate(scores, labels, info);

  const fs::path root = ensure_dir(rc.out_dir);
  const auto roc_path = root / (name + "_roc.csv");
  write_text(roc_path, roc_to_csv(ev.curve));
  ev.report.roc_csv = roc_path.string();
  const auto report_path = root / (name + "_report.json");
  write_text(report_path, report_to_json(ev.report));
  std::printf("%s on %s: AUC %.4f, P_d@P_fa=0.05 %.4f (%zu bins, %zu speech); report %s\n",
              name.c_str(), info.dataset.c_str(), ev.report.auc, ev.report.pd_at_pfa05,
              ev.report.pooled_bins, ev.report.speech_bins, report_path.string().c_str());
  return kOk;
}

// --- infer -------------------------------------------------------------------

struct InferArgs {
  std::string wav, estimator = "bundle", model, output;
};

int cmd_infer(const Globals& g, const InferArgs& a) {
  const RunConfig rc = load_config(g);
  const auto u = read_wav(a.wav);
  SppMatrix spp;
  if (a.estimator == "bundle") {
    if (a.model.empty()) throw Error(ErrorCode::InvalidConfig, "--model is required for the bundle estimator");
    spp = infer(load_bundle(a.model), u);
  } else if (a.estimator == "unbiased") {
    spp = unbiased_mmse_spp(power_spec(stft(u)), rc.baseline).spp;
  } else {
    throw Error(ErrorCode::InvalidConfig, "infer supports the bundle and unbiased estimators");
  }
  fs::path out = a.output;
  if (out.empty()) out = ensure_dir(rc.out_dir) / (fs::path(a.wav).stem().string() + "_spp.csv");
  write_text(out, matrix_csv(spp.values));
  std::printf("wrote %zu x %zu SPP matrix to %s\n", spp.bins(), spp.frames(), out.string().c_str());
  return kOk;
}

// --- report ------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> reports;
  std::string png = "roc.png";
};

int cmd_report(const Globals& g, const ReportArgs& a) {
  const RunConfig rc = load_config(g);
  std::vector<MetricsReport> reports;
  for (const auto& p : a.reports) {
    try {
      reports.push_back(report_from_json(read_text(p)));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CorruptFile)
        throw Error(ErrorCode::InvalidConfig, "malformed report '" + p + "': " + e.what());
      throw;
    }
  }
  const fs::path root = ensure_dir(rc.out_dir);
  const auto table = comparison_table_csv(reports);
  write_text(root / "comparison.csv", table);
  write_text(root / "roc.gnuplot", gnuplot_script(reports, a.png));
  std::fputs(table.c_str(), stdout);

  const auto ratios = mac_ratios(reports);
  const auto largest = std::max_element(reports.begin(), reports.end(), [](const auto& x, const auto& y) {
    return x.macs_per_frame < y.macs_per_frame;
  });
  if (largest != reports.end() && largest->macs_per_frame > 0) {
    std::printf("MACs per frame relative to %s (%s):\n", largest->estimator.c_str(), kMacConvention);
    for (std::size_t i = 0; i < reports.size(); ++i)
      if (reports[i].macs_per_frame > 0)
        std::printf("  %s: %zu (%.5f)\n", reports[i].estimator.c_str(), reports[i].macs_per_frame,
                    ratios[i]);
  }
  std::printf("wrote %s and %s\n", (root / "comparison.csv").string().c_str(),
              (root / "roc.gnuplot").string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency bin-wise speech presence probability toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--out-dir", g.out_dir, "Directory for all outputs");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic tone-burst/white-noise corpus");
  synth->add_option("--utterances", sa.utterances);
  synth->add_option("--seconds", sa.seconds);
  synth->add_option("--noise-stddev", sa.noise_stddev);

  MixArgs ma;
  auto* mix = app.add_subcommand("mix", "Mix clean and noise WAVs at random SNRs");
  mix->add_option("--clean-dir", ma.clean_dir)->required();
  mix->add_option("--noise-dir", ma.noise_dir)->required();
  mix->add_option("--snr-min", ma.snr_min);
  mix->add_option("--snr-max", ma.snr_max);
  mix->add_option("--name", ma.name, "Manifest name (train, test, ...)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a bin-wise or typical model");
  train->add_option("--manifest", ta.manifest)->required();
  train->add_option("--kind", ta.kind)->check(CLI::IsMember({"binwise", "typical"}));
  train->add_option("--neighbors", ta.neighbors);
  train->add_option("--epochs", ta.epochs);
  train->add_option("--workers", ta.workers);
  train->add_option("--name", ta.name, "Output file stem");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate an estimator against clean-speech labels");
  eval->add_option("--manifest", ea.manifest)->required();
  eval->add_option("--estimator", ea.estimator)->check(CLI::IsMember({"bundle", "unbiased", "oracle"}));
  eval->add_option("--model", ea.model);
  eval->add_option("--name", ea.name, "Estimator label in the report");

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "Write the SPP matrix of one WAV as CSV");
  inf->add_option("--wav", ia.wav)->required();
  inf->add_option("--estimator", ia.estimator)->check(CLI::IsMember({"bundle", "unbiased"}));
  inf->add_option("--model", ia.model);
  inf->add_option("--output", ia.output);

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Merge reports into a table and a gnuplot script");
  rep->add_option("reports", ra.reports)->required();
  rep->add_option("--png", ra.png);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*synth) return cmd_synth(g, sa);
    if (*mix) return cmd_mix(g, ma);
    if (*train) return cmd_train(g, ta);
    if (*eval) return cmd_eval(g, ea);
    if (*inf) return cmd_infer(g, ia);
    if (*rep) return cmd_report(g, ra);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kOk;
}
