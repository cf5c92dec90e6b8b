// mriq: command-line front end for the quality-assessment pipeline.

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "mriq/dataset.hpp"
#include "mriq/error.hpp"
#include "mriq/hash.hpp"
#include "mriq/image_io.hpp"
#include "mriq/nn/checkpoint.hpp"
#include "mriq/nn/trainer.hpp"
#include "mriq/phantom.hpp"
#include "mriq/pipeline.hpp"
#include "mriq/service/http_service.hpp"

namespace fs = std::filesystem;
using namespace mriq;

namespace {

fs::path data_root() {
  const char* env = std::getenv("MRIQ_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("mriq-data");
}

void require(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError("missing " + what + ": " + p.string());
}

struct Common {
  std::string manifest;
  std::string checkpoint;
  std::string rulers;
  std::string labels;

  fs::path manifest_path() const { return manifest.empty() ? data_root() / "manifest.json" : fs::path(manifest); }
  fs::path dataset_dir() const { return manifest_path().parent_path().empty() ? fs::path(".") : manifest_path().parent_path(); }
  fs::path checkpoint_path() const { return checkpoint.empty() ? data_root() / "model.ckpt" : fs::path(checkpoint); }
  fs::path rulers_path() const { return rulers.empty() ? data_root() / "rulers" : fs::path(rulers); }
  fs::path labels_path() const { return labels.empty() ? data_root() / "labels.json" : fs::path(labels); }
};

std::vector<SimulatedSlice> load_split(const Common& c, const DatasetManifest& m, std::optional<Split> split) {
  std::vector<SimulatedSlice> out;
  for (const auto& r : m.entries)
    if (!split || r.split == *split) out.push_back(load_slice(c.dataset_dir(), r));
  return out;
}

// Label-store thresholds override those saved with the rulers.
void apply_stored_thresholds(RulerRegistry& reg, const fs::path& labels) {
  if (!fs::exists(labels)) return;
  service::LabelStore store(labels);
  for (auto& [name, r] : reg)
    if (auto t = store.threshold(name)) set_threshold(r, {t->t_a, t->t_b});
}

int cmd_simulate(const Common& c, const std::string& out, DatasetConfig cfg, bool no_labels, bool kspace) {
  const fs::path dir = out.empty() ? data_root() : fs::path(out);
  DatasetManifest m = build_dataset(cfg, dir, kspace);
  if (no_labels) {
    for (auto& e : m.entries) e.human_label.reset();
    write_manifest(dir / "manifest.json", m);
  }
  (void)c;
  std::printf("wrote %zu slices (%d versions + 1 motion each) to %s\n", m.entries.size(), cfg.m_t,
              dir.string().c_str());
  return 0;
}

int cmd_calibrate(const Common& c, double eta, const std::string& scope, const std::string& rater) {
  require(c.manifest_path(), "manifest");
  DatasetManifest m = read_manifest(c.manifest_path());
  if (!c.labels.empty()) {
    require(c.labels_path(), "label store");
    service::LabelStore store(c.labels_path());
    const auto snap = store.snapshot();
    int taken = 0;
    for (auto& e : m.entries) {
      auto it = snap.picks.find(e.slice_id);
      if (it == snap.picks.end() || it->second.empty()) continue;
      auto jt = rater.empty() ? it->second.begin() : it->second.find(rater);
      if (jt == it->second.end()) continue;
      e.human_label = jt->second.h;
      ++taken;
    }
    std::printf("took %d picks from %s\n", taken, c.labels_path().string().c_str());
  }
  std::vector<SliceRecord*> recs;
  for (auto& e : m.entries) recs.push_back(&e);
  const auto sc = scope == "per-scan-type" ? CalibrationScope::kPerScanType : CalibrationScope::kGlobal;
  const double mu = calibrate_records(recs, eta, sc);
  write_manifest(c.manifest_path(), m);
  std::printf("calibrated %zu slices, mu_h = %.4f, eta = %.3f\n", recs.size(), mu, eta);
  return 0;
}

int cmd_train(const Common& c, nn::TrainConfig tc, const std::string& targets) {
  require(c.manifest_path(), "manifest");
  const DatasetManifest m = read_manifest(c.manifest_path());
  const auto train = load_split(c, m, Split::kTrain);
  const bool calibrated = targets == "calibrated";
  std::vector<nn::NoiseSet> ns;
  std::vector<nn::MotionPair> mp;
  if (tc.mode != nn::TrainMode::kMotion) ns = noise_sets(train, Split::kTrain, calibrated);
  if (tc.mode != nn::TrainMode::kNoise) mp = motion_pairs(train, Split::kTrain);
  tc.net.input_size = m.config.size;
  tc.on_epoch = [](const nn::EpochStats& s) {
    std::printf("epoch %3d  noise %.4f  motion %.4f\n", s.epoch + 1, s.noise_loss, s.motion_loss);
    std::fflush(stdout);
  };
  const auto result = nn::train(ns, mp, tc);
  nn::save_checkpoint(c.checkpoint_path(), result.net, tc.seed, sha256_file(c.manifest_path()));
  std::printf("saved %s\n", c.checkpoint_path().string().c_str());
  return 0;
}

int cmd_make_ruler(const Common& c, int m_r, double low, double high, std::vector<std::string> types,
                   const std::vector<std::string>& thresholds) {
  require(c.manifest_path(), "manifest");
  require(c.checkpoint_path(), "checkpoint");
  const DatasetManifest m = read_manifest(c.manifest_path());
  const auto ck = nn::load_checkpoint(c.checkpoint_path());
  const std::string hash = nn::checkpoint_hash(c.checkpoint_path());
  if (types.empty()) types = m.config.scan_types;
  std::map<std::string, RulerThreshold> given;
  for (const auto& t : thresholds) {
    const auto eq = t.find('='), comma = t.find(',');
    if (eq == std::string::npos || comma == std::string::npos || comma < eq)
      throw InvalidArgument("threshold must look like scan_type=t_a,t_b: " + t);
    given[t.substr(0, eq)] = {std::stoi(t.substr(eq + 1, comma - eq - 1)), std::stoi(t.substr(comma + 1))};
  }
  RulerRegistry reg;
  for (const auto& st : types) {
    ImageRuler r = build_dataset_ruler(m.config, st, m_r, {low, high});
    cache_scores(r, ck.net);
    r.checkpoint_hash = hash;
    if (auto it = given.find(st); it != given.end()) set_threshold(r, it->second);
    std::printf("%-12s S_ruler:", st.c_str());
    for (double s : *r.scores) std::printf(" %.3f", s);
    std::printf("  threshold (%d,%d)\n", r.threshold->t_a, r.threshold->t_b);
    reg.emplace(st, std::move(r));
  }
  if (!c.labels.empty()) apply_stored_thresholds(reg, c.labels_path());
  save_registry(c.rulers_path(), reg);
  std::printf("saved %zu rulers to %s\n", reg.size(), c.rulers_path().string().c_str());
  return 0;
}

int cmd_score(const Common& c, const std::vector<std::string>& images, const std::string& scan_override) {
  require(c.checkpoint_path(), "checkpoint");
  require(c.rulers_path(), "ruler registry");
  const auto ck = nn::load_checkpoint(c.checkpoint_path());
  RulerRegistry reg = load_registry(c.rulers_path());
  if (!c.labels.empty()) apply_stored_thresholds(reg, c.labels_path());
  std::printf("%-40s %10s %4s %4s", "image", "raw", "RS", "PF");
  if (ck.net.config().motion_branch) std::printf(" %8s", "p_clean");
  std::printf("\n");
  for (const auto& path : images) {
    require(path, "image");
    const auto rec = io::read_img(path);
    const std::string st = scan_override.empty() ? rec.image.scan_type : scan_override;
    const auto out = ck.net.forward(rec.image.pixels);
    const ImageRuler& ruler = select_ruler(reg, st);
    std::printf("%-40s %10.4f %4d %4d", path.c_str(), out.noise_score, ruler_score(ruler, out.noise_score),
                pass_fail(ruler, out.noise_score) ? 1 : 0);
    if (ck.net.config().motion_branch) std::printf(" %8.4f", out.motion_probability);
    std::printf("\n");
  }
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& split_name, const std::string& json_out) {
  require(c.manifest_path(), "manifest");
  require(c.checkpoint_path(), "checkpoint");
  require(c.rulers_path(), "ruler registry");
  const DatasetManifest m = read_manifest(c.manifest_path());
  const auto ck = nn::load_checkpoint(c.checkpoint_path());
  RulerRegistry reg = load_registry(c.rulers_path());
  if (!c.labels.empty()) apply_stored_thresholds(reg, c.labels_path());
  const Split split = split_from_string(split_name);
  const auto slices = load_split(c, m, split);
  EvalReport report;
  if (ck.net.config().noise_branch) {
    NoiseEvaluation e = evaluate_noise(ck.net, reg, m.config, slices, split);
    int m_r = 0;
    for (const auto& [n, r] : reg) m_r = std::max(m_r, r.m_r());
    // Rater test labels, when present, replace the injected-level proxies.
    if (!c.labels.empty() && fs::exists(c.labels_path())) {
      service::LabelStore store(c.labels_path());
      const auto snap = store.snapshot();
      std::vector<double> a, b;
      int replaced = 0;
      for (std::size_t i = 0; i < e.image_id.size(); ++i) {
        auto it = snap.test_labels.find(e.image_id[i]);
        if (it == snap.test_labels.end() || it->second.empty()) continue;
        const auto& first = it->second.begin()->second;
        e.rs_label[i] = first.rs;
        e.pf_label[i] = first.pf;
        ++replaced;
        if (it->second.size() >= 2) {
          a.push_back(first.rs);
          b.push_back(std::next(it->second.begin())->second.rs);
        }
      }
      if (replaced > 0) {
        refresh_report(e, m_r);
        std::printf("using %d rater test labels\n", replaced);
      }
      if (a.size() >= 2) {
        try {
          e.report.krippendorff = krippendorff_alpha_ci(a, b, 1000, 0);
          e.report.has_alpha = true;
        } catch (const DegenerateInput&) {
        }
      }
    }
    report = e.report;
  }
  if (ck.net.config().motion_branch) {
    const auto pairs = motion_pairs(slices, split);
    report.motion_accuracy = motion_accuracy(ck.net, pairs);
    report.has_motion = true;
  }
  std::fputs(report_table(report).c_str(), stdout);
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw IoError("cannot write " + json_out);
    out << report_json(report) << '\n';
  }
  return 0;
}

service::LabelService* g_service = nullptr;

int cmd_serve(const Common& c, const std::string& host, int port) {
  require(c.manifest_path(), "manifest");
  service::LabelService svc({c.dataset_dir(), c.rulers_path(), c.labels_path()});
  g_service = &svc;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  const int bound = svc.bind(host, port);
  std::printf("serving on http://%s:%d (labels: %s)\n", host.c_str(), bound, c.labels_path().string().c_str());
  std::fflush(stdout);
  svc.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MRI artifact-specific quality assessment on simulated data"};
  app.require_subcommand(1);
  Common c;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool manifest, bool checkpoint, bool rulers, bool labels) {
    if (manifest) sub->add_option("--manifest", c.manifest, "dataset manifest (default $MRIQ_DATA_DIR/manifest.json)");
    if (checkpoint) sub->add_option("--checkpoint", c.checkpoint, "network checkpoint");
    if (rulers) sub->add_option("--rulers", c.rulers, "ruler registry directory");
    if (labels) sub->add_option("--labels", c.labels, "label store file");
  };

  DatasetConfig dcfg;
  std::string out_dir, heuristic = "block-dct";
  bool no_labels = false, kspace = false;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim->add_option("--out", out_dir, "output directory (default $MRIQ_DATA_DIR)");
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--mt", dcfg.m_t, "versions per set")->capture_default_str();
  sim->add_option("--size", dcfg.size, "image size")->capture_default_str();
  sim->add_option("--coils", dcfg.n_coils, "receive coils")->capture_default_str();
  sim->add_option("--etl", dcfg.etl, "echo train length")->capture_default_str();
  sim->add_option("--n-train", dcfg.n_train)->capture_default_str();
  sim->add_option("--n-val", dcfg.n_val)->capture_default_str();
  sim->add_option("--n-test", dcfg.n_test)->capture_default_str();
  sim->add_option("--slices-per-subject", dcfg.slices_per_subject)->capture_default_str();
  sim->add_option("--snr-low", dcfg.snr_low_db)->capture_default_str();
  sim->add_option("--snr-high", dcfg.snr_high_db)->capture_default_str();
  sim->add_option("--scan-types", dcfg.scan_types)->capture_default_str();
  sim->add_option("--heuristic", heuristic, "block-dct or snr")->capture_default_str();
  sim->add_flag("--no-labels", no_labels, "leave picks to human raters");
  sim->add_flag("--write-kspace", kspace, "also write KSET files");

  double eta = kDefaultEta;
  std::string scope = "global", rater;
  auto* cal = app.add_subcommand("calibrate", "calibrate heuristic labels with rater picks");
  add_common(cal, true, false, false, true);
  cal->add_option("--eta", eta, "calibration strength in (0, 1]")->capture_default_str();
  cal->add_option("--scope", scope, "global or per-scan-type")->capture_default_str();
  cal->add_option("--rater", rater, "rater whose picks to use (default: first)");

  nn::TrainConfig tc;
  std::string mode = "dual", targets = "calibrated";
  auto* trn = app.add_subcommand("train", "train the network");
  add_common(trn, true, true, false, false);
  trn->add_option("--seed", seed, "training seed");
  trn->add_option("--epochs", tc.epochs)->capture_default_str();
  trn->add_option("--lr", tc.adam.learning_rate)->capture_default_str();
  trn->add_option("--mode", mode, "noise, motion or dual")->capture_default_str();
  trn->add_option("--targets", targets, "calibrated or heuristic")->capture_default_str();

  int m_r = 8;
  double r_low = 8.0, r_high = 34.0;
  std::vector<std::string> ruler_types, ruler_thresholds;
  auto* mkr = app.add_subcommand("make-ruler", "build rulers and cache their scores");
  add_common(mkr, true, true, true, true);
  mkr->add_option("--mr", m_r, "versions per ruler")->capture_default_str();
  mkr->add_option("--range-low", r_low)->capture_default_str();
  mkr->add_option("--range-high", r_high)->capture_default_str();
  mkr->add_option("--scan-types", ruler_types, "default: the dataset's");
  mkr->add_option("--threshold", ruler_thresholds, "scan_type=t_a,t_b (repeatable)");

  std::vector<std::string> images;
  std::string scan_override;
  auto* scr = app.add_subcommand("score", "print raw score, ruler score and pass/fail per image");
  add_common(scr, false, true, true, true);
  scr->add_option("images", images, "IMG files")->required();
  scr->add_option("--scan-type", scan_override, "override the sidecar scan type");

  std::string split = "test", json_out;
  auto* evl = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
  add_common(evl, true, true, true, true);
  evl->add_option("--split", split)->capture_default_str();
  evl->add_option("--json", json_out, "also write the report as JSON");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* srv = app.add_subcommand("serve", "HTTP API for the labeling UI");
  add_common(srv, true, false, true, true);
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      dcfg.seed = seed;
      dcfg.heuristic = heuristic_method_from_string(heuristic);
      return cmd_simulate(c, out_dir, dcfg, no_labels, kspace);
    }
    if (*cal) return cmd_calibrate(c, eta, scope, rater);
    if (*trn) {
      tc.seed = seed;
      tc.mode = mode == "noise" ? nn::TrainMode::kNoise : mode == "motion" ? nn::TrainMode::kMotion : nn::TrainMode::kDual;
      if (mode != "noise" && mode != "motion" && mode != "dual") throw InvalidArgument("unknown --mode " + mode);
      if (targets != "calibrated" && targets != "heuristic") throw InvalidArgument("unknown --targets " + targets);
      return cmd_train(c, tc, targets);
    }
    if (*mkr) return cmd_make_ruler(c, m_r, r_low, r_high, ruler_types, ruler_thresholds);
    if (*scr) return cmd_score(c, images, scan_override);
    if (*evl) return cmd_evaluate(c, split, json_out);
    if (*srv) return cmd_serve(c, host, port);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mriq %s: error: %s\n", app.get_subcommands().front()->get_name().c_str(), e.what());
    return 1;
  }
  return 0;
}
