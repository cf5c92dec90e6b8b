#include "mriq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>

#include "mriq/error.hpp"
#include "mriq/image_io.hpp"
#include "mriq/motion.hpp"
#include "mriq/phantom.hpp"
#include "mriq/rng.hpp"

namespace mriq {

namespace {

using nlohmann::json;

// Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Acquisition {
  CoilMaps maps;
  KSpaceVolume clean;
  NoiseInjection acquired;
};

Acquisition acquire(const DatasetConfig& config, const SliceRecord& rec) {
  const std::uint64_t subject_seed = derive_seed(config.seed, {fnv1a(rec.subject_id)});
  const std::uint64_t slice_seed = derive_seed(subject_seed, {static_cast<std::uint64_t>(rec.slice_index)});
  std::mt19937_64 rng(subject_seed);
  std::uniform_real_distribution<double> gain_db(-config.intensity_jitter_db, config.intensity_jitter_db);
  const double gain = std::pow(10.0, (config.intensity_jitter_db > 0.0 ? gain_db(rng) : 0.0) / 20.0);

  Acquisition a;
  a.maps = synth_coil_maps(config.size, config.n_coils, derive_seed(subject_seed, {1}));
  Phantom ph = generate_phantom(derive_seed(slice_seed, {2}), config.size, rec.scan_type);
  for (auto& v : ph.pixels.values()) v *= gain;
  a.clean = forward_kspace(ph, a.maps, config.etl);
  a.acquired = inject_noise_calibrated(a.clean, config.acquisition_snr_db, derive_seed(slice_seed, {3}));
  return a;
}

std::uint64_t slice_seed_of(const DatasetConfig& config, const SliceRecord& rec) {
  return derive_seed(derive_seed(config.seed, {fnv1a(rec.subject_id)}), {static_cast<std::uint64_t>(rec.slice_index)});
}

void check_config(const DatasetConfig& c) {
  if (c.scan_types.empty()) throw InvalidArgument("dataset: no scan types");
  if (c.n_train < 0 || c.n_val < 0 || c.n_test < 0 || c.n_train + c.n_val + c.n_test == 0)
    throw InvalidArgument("dataset: slice counts must be non-negative and not all zero");
  if (c.slices_per_subject < 1) throw InvalidArgument("dataset: slices_per_subject < 1");
  if (c.m_t < 3) throw InvalidArgument("dataset: m_t must be >= 3");
}

json config_to_json(const DatasetConfig& c) {
  return {{"scan_types", c.scan_types},
          {"n_train", c.n_train},
          {"n_val", c.n_val},
          {"n_test", c.n_test},
          {"slices_per_subject", c.slices_per_subject},
          {"m_t", c.m_t},
          {"size", c.size},
          {"n_coils", c.n_coils},
          {"etl", c.etl},
          {"snr_low_db", c.snr_low_db},
          {"snr_high_db", c.snr_high_db},
          {"acquisition_snr_db", c.acquisition_snr_db},
          {"intensity_jitter_db", c.intensity_jitter_db},
          {"heuristic", std::string(to_string(c.heuristic))},
          {"rater", {{"standard_db", c.rater.standard_db}, {"jitter_db", c.rater.jitter_db}}},
          {"label_fraction", c.label_fraction},
          {"seed", c.seed}};
}

DatasetConfig config_from_json(const json& j) {
  DatasetConfig c;
  c.scan_types = j.at("scan_types").get<std::vector<std::string>>();
  c.n_train = j.at("n_train").get<int>();
  c.n_val = j.at("n_val").get<int>();
  c.n_test = j.at("n_test").get<int>();
  c.slices_per_subject = j.at("slices_per_subject").get<int>();
  c.m_t = j.at("m_t").get<int>();
  c.size = j.at("size").get<int>();
  c.n_coils = j.at("n_coils").get<int>();
  c.etl = j.at("etl").get<int>();
  c.snr_low_db = j.at("snr_low_db").get<double>();
  c.snr_high_db = j.at("snr_high_db").get<double>();
  c.acquisition_snr_db = j.at("acquisition_snr_db").get<double>();
  c.intensity_jitter_db = j.at("intensity_jitter_db").get<double>();
  c.heuristic = heuristic_method_from_string(j.at("heuristic").get<std::string>());
  c.rater.standard_db = j.at("rater").at("standard_db").get<double>();
  c.rater.jitter_db = j.at("rater").at("jitter_db").get<double>();
  c.label_fraction = j.at("label_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json record_to_json(const SliceRecord& r) {
  json j = {{"slice_id", r.slice_id},
            {"subject_id", r.subject_id},
            {"scan_type", r.scan_type},
            {"slice_index", r.slice_index},
            {"split", to_string(r.split)},
            {"version_files", r.version_files},
            {"motion_file", r.motion_file},
            {"level_db", r.level_db},
            {"heuristic", r.heuristic}};
  j["calibrated"] = r.calibrated ? json(*r.calibrated) : json(nullptr);
  j["human_label"] = r.human_label ? json(*r.human_label) : json(nullptr);
  return j;
}

SliceRecord record_from_json(const json& j) {
  SliceRecord r;
  r.slice_id = j.at("slice_id").get<std::string>();
  r.subject_id = j.at("subject_id").get<std::string>();
  r.scan_type = j.at("scan_type").get<std::string>();
  r.slice_index = j.at("slice_index").get<int>();
  r.split = split_from_string(j.at("split").get<std::string>());
  r.version_files = j.at("version_files").get<std::vector<std::string>>();
  r.motion_file = j.at("motion_file").get<std::string>();
  r.level_db = j.at("level_db").get<std::vector<double>>();
  r.heuristic = j.at("heuristic").get<std::vector<double>>();
  if (!j.at("calibrated").is_null()) r.calibrated = j.at("calibrated").get<std::vector<double>>();
  if (!j.at("human_label").is_null()) r.human_label = j.at("human_label").get<int>();
  return r;
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + s + "'");
}

double effective_level_db(double target_db, double acquisition_db) {
  double p = std::pow(10.0, -acquisition_db / 10.0);
  if (std::isfinite(target_db)) p += std::pow(10.0, -target_db / 10.0);
  return -10.0 * std::log10(p);
}

std::vector<SliceRecord> plan_dataset(const DatasetConfig& config) {
  check_config(config);
  std::vector<SliceRecord> out;
  int subject = 0;
  const std::pair<Split, int> splits[] = {
      {Split::kTrain, config.n_train}, {Split::kVal, config.n_val}, {Split::kTest, config.n_test}};
  for (const auto& [split, count] : splits) {
    for (int i = 0, k = 0; i < count; ++k) {
      char sid[32];
      std::snprintf(sid, sizeof sid, "s%03d", subject++);
      const std::string& scan = config.scan_types[static_cast<std::size_t>(k) % config.scan_types.size()];
      for (int sl = 0; sl < config.slices_per_subject && i < count; ++sl, ++i) {
        SliceRecord r;
        r.subject_id = sid;
        char id[48];
        std::snprintf(id, sizeof id, "%s-%02d", sid, sl);
        r.slice_id = id;
        r.scan_type = scan;
        r.slice_index = sl;
        r.split = split;
        for (int v = 1; v <= config.m_t; ++v)
          r.version_files.push_back("images/" + r.slice_id + "_v" + std::to_string(v) + ".img");
        r.motion_file = "images/" + r.slice_id + "_motion.img";
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

SimulatedSlice simulate_slice(const DatasetConfig& config, const SliceRecord& planned, bool keep_kspace) {
  const std::uint64_t seed = slice_seed_of(config, planned);
  Acquisition a = acquire(config, planned);
  SimulatedSlice s;
  s.record = planned;
  VersionSetImages set = make_version_set(a.acquired.kspace, config.m_t, config.snr_low_db, config.snr_high_db,
                                          derive_seed(seed, {4}));
  s.versions = std::move(set.versions);
  s.record.level_db.clear();
  for (double t : set.target_db) s.record.level_db.push_back(effective_level_db(t, config.acquisition_snr_db));

  // Motion is simulated on noise-free data; the same acquisition noise is
  // then added so the pair differs only by motion.
  const MotionTrajectory traj = sample_trajectory(derive_seed(seed, {5}), a.clean.n_shots());
  const KSpaceVolume moved = add_kspace_noise(motion_kspace(a.clean, a.maps, traj), a.acquired.sigma,
                                              derive_seed(seed, {3}));
  s.motion = recon_sos_image(moved);
  s.motion.version = config.m_t;

  for (auto& img : s.versions) {
    io::round_to_f32(img.pixels);
    img.slice_id = planned.slice_id;
    img.scan_type = planned.scan_type;
  }
  io::round_to_f32(s.motion.pixels);
  s.motion.slice_id = planned.slice_id;
  s.motion.scan_type = planned.scan_type;

  s.record.heuristic.clear();
  for (const auto& h : compute_heuristics(s.versions, config.heuristic)) s.record.heuristic.push_back(h.value);
  if (keep_kspace) s.acquired = std::move(a.acquired.kspace);
  return s;
}

void assign_synthetic_labels(const DatasetConfig& config, std::vector<SliceRecord*>& records) {
  std::map<std::string, std::vector<SliceRecord*>> by_subject;
  for (auto* r : records)
    if (r->split != Split::kTest) by_subject[r->subject_id].push_back(r);
  for (auto& [subject, recs] : by_subject) {
    std::mt19937_64 rng(derive_seed(config.seed, {fnv1a(subject), 7}));
    std::bernoulli_distribution take(config.label_fraction);
    std::vector<bool> chosen(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) chosen[i] = take(rng);
    if (std::none_of(chosen.begin(), chosen.end(), [](bool b) { return b; })) chosen[recs.size() / 2] = true;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (chosen[i])
        recs[i]->human_label = rater_pick(recs[i]->level_db, config.rater, rng);
      else
        recs[i]->human_label.reset();
    }
  }
}

std::vector<SimulatedSlice> simulate_dataset(const DatasetConfig& config) {
  std::vector<SimulatedSlice> out;
  for (const auto& rec : plan_dataset(config)) out.push_back(simulate_slice(config, rec));
  std::vector<SliceRecord*> recs;
  for (auto& s : out) recs.push_back(&s.record);
  assign_synthetic_labels(config, recs);
  return out;
}

DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& dir, bool write_kspace) {
  DatasetManifest m;
  m.config = config;
  for (const auto& planned : plan_dataset(config)) {
    SimulatedSlice s = simulate_slice(config, planned, write_kspace);
    for (std::size_t v = 0; v < s.versions.size(); ++v)
      io::write_img(dir / s.record.version_files[v], s.versions[v],
                    {{"subject_id", s.record.subject_id}, {"level_db", std::to_string(s.record.level_db[v])}});
    io::write_img(dir / s.record.motion_file, s.motion, {{"subject_id", s.record.subject_id}, {"role", "motion"}});
    if (write_kspace) io::write_kset(dir / ("kspace/" + s.record.slice_id + ".kset"), s.acquired);
    m.entries.push_back(std::move(s.record));
  }
  std::vector<SliceRecord*> recs;
  for (auto& r : m.entries) recs.push_back(&r);
  assign_synthetic_labels(config, recs);
  write_manifest(dir / "manifest.json", m);
  return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format"] = "mriq-manifest-1";
  j["config"] = config_to_json(m.config);
  json entries = json::array();
  for (const auto& r : m.entries) entries.push_back(record_to_json(r));
  j["entries"] = entries;
  return j.dump(1) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  m.config = config_from_json(j.at("config"));
  for (const auto& e : j.at("entries")) m.entries.push_back(record_from_json(e));
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + tmp.string());
    out << manifest_to_json(m);
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

double calibrate_records(std::span<SliceRecord*> records, double eta, CalibrationScope scope) {
  std::vector<SliceRecord*> used;
  std::vector<VersionSet> sets;
  for (auto* r : records) {
    if (r->split == Split::kTest) continue;
    VersionSet s;
    s.slice_id = r->slice_id;
    s.scan_type = r->scan_type;
    s.subject_id = r->subject_id;
    s.slice_index = r->slice_index;
    s.heuristic = r->heuristic;
    s.human_label = r->human_label;
    sets.push_back(std::move(s));
    used.push_back(r);
  }
  if (sets.empty()) throw DegenerateInput("calibrate: no train/val slices");
  const auto labeled = propagate_labels(sets);
  const CalibratedLabels cal = calibrate(labeled, eta, scope);
  for (std::size_t i = 0; i < used.size(); ++i) used[i]->calibrated = cal.scores[i];
  return cal.mu_h;
}

SliceRecord ruler_slice(const DatasetConfig& config, const std::string& scan_type) {
  SliceRecord r;
  r.subject_id = "ruler-" + scan_type;
  r.slice_id = r.subject_id + "-00";
  r.scan_type = scan_type;
  r.split = Split::kTest;
  (void)config;
  return r;
}

ImageRuler build_dataset_ruler(const DatasetConfig& config, const std::string& scan_type, int m_r,
                               const DbRange& range) {
  const SliceRecord rec = ruler_slice(config, scan_type);
  Acquisition a = acquire(config, rec);
  return build_ruler(a.acquired.kspace, m_r, range, {config.snr_low_db, config.snr_high_db},
                     derive_seed(slice_seed_of(config, rec), {6}));
}

std::vector<double> ruler_levels_db(const DatasetConfig& config, const ImageRuler& ruler) {
  std::vector<double> out;
  for (double t : ruler.target_db) out.push_back(effective_level_db(t, config.acquisition_snr_db));
  return out;
}

std::vector<double> threshold_grid(const RulerRegistry& registry) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [name, r] : registry) {
    if (!r.scores) throw StateError("ruler " + name + " has no cached scores");
    for (double s : *r.scores) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (!std::isfinite(lo)) throw MissingRuler("threshold grid: no ruler scores");
  std::vector<double> grid(100);
  for (int i = 0; i < 100; ++i) grid[i] = lo + (hi - lo) * i / 99.0;
  return grid;
}

double single_best_threshold(std::span<const double> raw, const std::vector<bool>& labels,
                             const RulerRegistry& registry) {
  if (raw.empty()) throw InvalidArgument("single_best_threshold: empty validation set");
  if (raw.size() != labels.size()) throw InvalidArgument("single_best_threshold: length mismatch");
  double best_t = 0.0;
  long best_correct = -1;
  for (double t : threshold_grid(registry)) {
    long correct = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) correct += ((raw[i] >= t) == labels[i]);
    if (correct > best_correct) {
      best_correct = correct;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace mriq
