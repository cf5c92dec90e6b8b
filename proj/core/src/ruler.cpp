#include "mriq/ruler.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "mriq/error.hpp"
#include "mriq/image_io.hpp"
#include "mriq/phantom.hpp"
#include "mriq/rng.hpp"

namespace mriq {

namespace {

void require_scores(const ImageRuler& r) {
  if (!r.scores) throw StateError("ruler " + r.scan_type + " has no cached scores");
  if (static_cast<int>(r.scores->size()) != r.m_r())
    throw StateError("ruler " + r.scan_type + ": score count does not match versions");
}

void check_threshold(RulerThreshold t, int m_r) {
  if (t.t_a < 0 || t.t_b > m_r - 1 || t.t_a > t.t_b)
    throw InvalidArgument("threshold (" + std::to_string(t.t_a) + ", " + std::to_string(t.t_b) +
                          ") outside 0 <= t_a <= t_b <= " + std::to_string(m_r - 1));
}

}  // namespace

void check_ruler_range(const DbRange& ruler, const DbRange& training) {
  if (!(ruler.low_db < ruler.high_db)) throw InvalidArgument("ruler range is empty");
  if (!(ruler.low_db < training.low_db && ruler.high_db > training.high_db))
    throw InvalidArgument("ruler range must strictly contain the training range");
}

ImageRuler build_ruler(const KSpaceVolume& acquired, int m_r, const DbRange& range, const DbRange& training,
                       std::uint64_t seed) {
  if (m_r < 2) throw InvalidArgument("m_r must be >= 2");
  check_ruler_range(range, training);
  ImageRuler r;
  r.scan_type = acquired.scan_type;
  r.target_db = linear_db_targets(m_r - 1, range.low_db, range.high_db);
  for (int v = 0; v < m_r - 1; ++v) {
    auto img = recon_sos_image(inject_noise(acquired, r.target_db[v], derive_seed(seed, {static_cast<std::uint64_t>(v)})));
    img.version = v;
    r.versions.push_back(std::move(img));
  }
  auto clean = recon_sos_image(acquired);
  clean.version = m_r - 1;
  r.versions.push_back(std::move(clean));
  r.target_db.push_back(kNoNoise);
  for (auto& img : r.versions) {
    io::round_to_f32(img.pixels);
    img.slice_id = "ruler-" + r.scan_type;
    img.scan_type = r.scan_type;
  }
  r.threshold = default_threshold(m_r);
  return r;
}

ImageRuler build_ruler(const Phantom& phantom, const CoilMaps& maps, int m_r, const DbRange& range,
                       const DbRange& training, std::uint64_t seed, int etl) {
  return build_ruler(forward_kspace(phantom, maps, etl), m_r, range, training, seed);
}

void cache_scores(ImageRuler& ruler, const nn::DualTaskNet& net) {
  std::vector<double> s;
  s.reserve(ruler.versions.size());
  for (const auto& v : ruler.versions) s.push_back(net.forward(v.pixels).noise_score);
  ruler.scores = std::move(s);
}

void set_threshold(ImageRuler& ruler, RulerThreshold t) {
  check_threshold(t, ruler.m_r());
  ruler.threshold = t;
}

int ruler_score(const ImageRuler& ruler, double raw) {
  require_scores(ruler);
  const auto& s = *ruler.scores;
  int best = 0;
  double best_d = std::abs(s[0] - raw);
  for (int v = 1; v < static_cast<int>(s.size()); ++v) {
    const double d = std::abs(s[v] - raw);
    if (d <= best_d) {
      best = v;
      best_d = d;
    }
  }
  return best;
}

double pass_threshold(const ImageRuler& ruler) {
  require_scores(ruler);
  if (!ruler.threshold) throw StateError("ruler " + ruler.scan_type + " has no threshold");
  check_threshold(*ruler.threshold, ruler.m_r());
  const auto& s = *ruler.scores;
  return (s[ruler.threshold->t_a] + s[ruler.threshold->t_b]) / 2.0;
}

bool pass_fail(const ImageRuler& ruler, double raw) { return raw >= pass_threshold(ruler); }

RulerThreshold default_threshold(int m_r) {
  const int t = std::min(3, m_r - 1);
  return {t, t};
}

const ImageRuler& select_ruler(const RulerRegistry& registry, const std::string& scan_type, RulerMatch mode) {
  if (registry.empty()) throw MissingRuler("ruler registry is empty");
  if (auto it = registry.find(scan_type); it != registry.end()) return it->second;
  if (mode == RulerMatch::kFatSuppressionFallback) {
    const auto fs = parse_scan_type(scan_type).fat_suppressed;
    if (fs) {
      for (const auto& [name, ruler] : registry)
        if (parse_scan_type(name).fat_suppressed == fs) return ruler;
    }
  }
  throw MissingRuler("no ruler compatible with scan type " + scan_type);
}

void save_ruler(const std::filesystem::path& dir, const ImageRuler& ruler) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["scan_type"] = ruler.scan_type;
  j["m_r"] = ruler.m_r();
  if (ruler.threshold) j["threshold"] = {ruler.threshold->t_a, ruler.threshold->t_b};
  j["checkpoint_hash"] = ruler.checkpoint_hash;
  if (ruler.scores) j["scores"] = *ruler.scores;
  nlohmann::json targets = nlohmann::json::array();
  for (double t : ruler.target_db) targets.push_back(std::isfinite(t) ? nlohmann::json(t) : nlohmann::json(nullptr));
  j["target_db"] = targets;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& v : ruler.versions) {
    const std::string name = "v" + std::to_string(v.version) + ".img";
    io::write_img(dir / name, v, {{"role", "ruler"}});
    files.push_back(name);
  }
  j["versions"] = files;
  std::ofstream out(dir / "ruler.json");
  if (!out) throw IoError("cannot write " + (dir / "ruler.json").string());
  out << j.dump(2) << '\n';
}

ImageRuler load_ruler(const std::filesystem::path& dir) {
  const auto path = dir / "ruler.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt ruler file " + path.string() + ": " + e.what());
  }
  ImageRuler r;
  r.scan_type = j.at("scan_type").get<std::string>();
  for (const auto& f : j.at("versions")) r.versions.push_back(io::read_img(dir / f.get<std::string>()).image);
  for (const auto& t : j.at("target_db")) r.target_db.push_back(t.is_null() ? kNoNoise : t.get<double>());
  if (j.contains("scores")) r.scores = j.at("scores").get<std::vector<double>>();
  if (j.contains("threshold")) r.threshold = RulerThreshold{j["threshold"][0].get<int>(), j["threshold"][1].get<int>()};
  r.checkpoint_hash = j.value("checkpoint_hash", "");
  if (j.at("m_r").get<int>() != r.m_r()) throw IoError("ruler " + path.string() + ": m_r does not match images");
  return r;
}

void save_registry(const std::filesystem::path& dir, const RulerRegistry& registry) {
  for (const auto& [name, ruler] : registry) save_ruler(dir / name, ruler);
}

RulerRegistry load_registry(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("ruler registry not found: " + dir.string());
  RulerRegistry reg;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "ruler.json")) {
      auto r = load_ruler(e.path());
      reg.emplace(r.scan_type, std::move(r));
    }
  }
  if (reg.empty()) throw MissingRuler("no rulers under " + dir.string());
  return reg;
}

}  // namespace mriq
