#include "mriq/service/http_service.hpp"

#include <httplib.h>

#include <json.hpp>
#include <map>

#include "mriq/error.hpp"
#include "mriq/image_io.hpp"
#include "mriq/service/png16.hpp"

namespace mriq::service {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& reason) {
  send_json(res, {{"error", reason}}, status);
}

std::string image_url(const std::string& id) { return "/api/images/" + id; }

std::string version_image_id(const std::string& slice_id, int v) { return slice_id + "_v" + std::to_string(v); }

std::string ruler_image_id(const std::string& scan_type, int v) {
  return "ruler-" + scan_type + "_v" + std::to_string(v);
}

// Parses a JSON request body; on failure answers 422 and returns nullopt.
std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw json::type_error::create(302, "body must be a JSON object", nullptr);
    return j;
  } catch (const json::exception& e) {
    send_error(res, 422, std::string("invalid JSON body: ") + e.what());
    return std::nullopt;
  }
}

std::optional<int> int_field(const json& j, const char* name, httplib::Response& res) {
  if (!j.contains(name) || !j[name].is_number_integer()) {
    send_error(res, 422, std::string("field '") + name + "' must be an integer");
    return std::nullopt;
  }
  return j[name].get<int>();
}

}  // namespace

LabelService::LabelService(const ServiceConfig& config)
    : config_(config), server_(std::make_unique<httplib::Server>()) {
  manifest_ = read_manifest(config_.dataset_dir / "manifest.json");
  if (!config_.rulers_dir.empty() && std::filesystem::exists(config_.rulers_dir))
    rulers_ = load_registry(config_.rulers_dir);
  store_ = std::make_unique<LabelStore>(config_.label_store);
  routes();
}

LabelService::~LabelService() { stop(); }

void LabelService::listen(const std::string& host, int port) {
  bind(host, port);
  run();
}

int LabelService::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    if (!server_->bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  if (port_ < 0) throw IoError("cannot bind " + host);
  return port_;
}

void LabelService::run() { server_->listen_after_bind(); }

void LabelService::stop() {
  if (server_) server_->stop();
}

void LabelService::routes() {
  auto& srv = *server_;
  const int m_t = manifest_.config.m_t;

  // Lookup tables built once; the manifest and rulers are read-only here.
  auto by_id = std::make_shared<std::map<std::string, const SliceRecord*>>();
  for (const auto& e : manifest_.entries) (*by_id)[e.slice_id] = &e;

  auto set_payload = [this, m_t](const SliceRecord& r) {
    json versions = json::array();
    for (int v = 1; v <= m_t; ++v)
      versions.push_back({{"v", v}, {"image", image_url(version_image_id(r.slice_id, v))}});
    json labels = json::object();
    const auto snap = store_->snapshot();
    if (auto it = snap.picks.find(r.slice_id); it != snap.picks.end())
      for (const auto& [rater, p] : it->second) labels[rater] = {{"h", p.h}, {"timestamp", p.timestamp}};
    return json{{"id", r.slice_id}, {"scan_type", r.scan_type}, {"m_t", m_t},
                {"choices", {{"min", 0}, {"max", m_t + 1}}}, {"versions", versions}, {"labels", labels}};
  };

  srv.Get("/api/sets/next", [this, set_payload](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) return send_error(res, 422, "query parameter 'rater' is required");
    for (const auto& e : manifest_.entries) {
      if (e.split == Split::kTest) continue;
      if (!store_->pick(e.slice_id, rater)) return send_json(res, set_payload(e));
    }
    res.status = 204;
  });

  srv.Get(R"(/api/sets/([^/]+))", [by_id, set_payload](const httplib::Request& req, httplib::Response& res) {
    auto it = by_id->find(req.matches[1]);
    if (it == by_id->end() || it->second->split == Split::kTest) return send_error(res, 404, "unknown set");
    send_json(res, set_payload(*it->second));
  });

  srv.Post(R"(/api/sets/([^/]+)/label)", [this, by_id, m_t](const httplib::Request& req, httplib::Response& res) {
    auto it = by_id->find(req.matches[1]);
    if (it == by_id->end() || it->second->split == Split::kTest) return send_error(res, 404, "unknown set");
    auto body = parse_body(req, res);
    if (!body) return;
    auto h = int_field(*body, "h", res);
    if (!h) return;
    const std::string rater = body->value("rater", std::string("default"));
    try {
      store_->put_pick(it->first, rater, *h, m_t);
    } catch (const InvalidArgument& e) {
      return send_error(res, 422, e.what());
    }
    send_json(res, {{"id", it->first}, {"rater", rater}, {"h", *h}});
  });

  auto ruler_payload = [this](const ImageRuler& r, bool with_images) {
    json j{{"scan_type", r.scan_type}, {"m_r", r.m_r()}};
    RulerThreshold t = r.threshold.value_or(default_threshold(r.m_r()));
    if (auto stored = store_->threshold(r.scan_type)) t = {stored->t_a, stored->t_b};
    j["threshold"] = {{"t_a", t.t_a}, {"t_b", t.t_b}};
    if (r.scores) j["scores"] = *r.scores;
    if (with_images) {
      json imgs = json::array();
      for (int v = 0; v < r.m_r(); ++v) imgs.push_back({{"v", v}, {"image", image_url(ruler_image_id(r.scan_type, v))}});
      j["versions"] = imgs;
    }
    return j;
  };

  srv.Get("/api/rulers", [this, ruler_payload](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& [name, r] : rulers_) list.push_back(ruler_payload(r, false));
    send_json(res, list);
  });

  srv.Get(R"(/api/rulers/([^/]+))", [this, ruler_payload](const httplib::Request& req, httplib::Response& res) {
    auto it = rulers_.find(req.matches[1]);
    if (it == rulers_.end()) return send_error(res, 404, "unknown ruler");
    send_json(res, ruler_payload(it->second, true));
  });

  srv.Post(R"(/api/rulers/([^/]+)/threshold)", [this](const httplib::Request& req, httplib::Response& res) {
    auto it = rulers_.find(req.matches[1]);
    if (it == rulers_.end()) return send_error(res, 404, "unknown ruler");
    auto body = parse_body(req, res);
    if (!body) return;
    auto t_a = int_field(*body, "t_a", res);
    if (!t_a) return;
    auto t_b = int_field(*body, "t_b", res);
    if (!t_b) return;
    try {
      store_->put_threshold(it->first, *t_a, *t_b, it->second.m_r(), body->value("rater", std::string()));
    } catch (const InvalidArgument& e) {
      return send_error(res, 422, e.what());
    }
    send_json(res, {{"scan_type", it->first}, {"t_a", *t_a}, {"t_b", *t_b}});
  });

  // Test items: every version image of every test slice.
  auto test_items = std::make_shared<std::vector<std::pair<std::string, const SliceRecord*>>>();
  for (const auto& e : manifest_.entries)
    if (e.split == Split::kTest)
      for (int v = 1; v <= m_t; ++v) test_items->emplace_back(version_image_id(e.slice_id, v), &e);
  auto test_index = std::make_shared<std::map<std::string, const SliceRecord*>>(test_items->begin(), test_items->end());

  auto matched_ruler = [this](const SliceRecord& r) -> const ImageRuler* {
    try {
      return &select_ruler(rulers_, r.scan_type);
    } catch (const MissingRuler&) {
      return nullptr;
    }
  };

  srv.Get("/api/test/next", [this, test_items, matched_ruler](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) return send_error(res, 422, "query parameter 'rater' is required");
    for (const auto& [id, rec] : *test_items) {
      if (store_->test_label(id, rater)) continue;
      json j{{"id", id}, {"scan_type", rec->scan_type}, {"image", image_url(id)}};
      if (const ImageRuler* r = matched_ruler(*rec)) {
        j["ruler"] = r->scan_type;
        j["m_r"] = r->m_r();
      }
      return send_json(res, j);
    }
    res.status = 204;
  });

  srv.Post(R"(/api/test/([^/]+)/label)",
           [this, test_index, matched_ruler](const httplib::Request& req, httplib::Response& res) {
             auto it = test_index->find(req.matches[1]);
             if (it == test_index->end()) return send_error(res, 404, "unknown test image");
             const ImageRuler* ruler = matched_ruler(*it->second);
             if (!ruler) return send_error(res, 404, "no ruler for scan type " + it->second->scan_type);
             auto body = parse_body(req, res);
             if (!body) return;
             auto rs = int_field(*body, "rs", res);
             if (!rs) return;
             if (!body->contains("pf") || !(*body)["pf"].is_boolean())
               return send_error(res, 422, "field 'pf' must be a boolean");
             const bool pf = (*body)["pf"].get<bool>();
             const std::string rater = body->value("rater", std::string("default"));
             try {
               store_->put_test_label(it->first, rater, *rs, pf, ruler->m_r());
             } catch (const InvalidArgument& e) {
               return send_error(res, 422, e.what());
             }
             send_json(res, {{"id", it->first}, {"rater", rater}, {"rs", *rs}, {"pf", pf}});
           });

  srv.Get(R"(/api/images/([^/]+))", [this, by_id](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const MagnitudeImage* img = nullptr;
    MagnitudeImage loaded;
    try {
      const auto sep = id.rfind('_');
      if (sep == std::string::npos) return send_error(res, 404, "unknown image");
      const std::string head = id.substr(0, sep), tail = id.substr(sep + 1);
      if (head.rfind("ruler-", 0) == 0 && tail.size() > 1 && tail[0] == 'v') {
        auto it = rulers_.find(head.substr(6));
        const int v = std::stoi(tail.substr(1));
        if (it == rulers_.end() || v < 0 || v >= it->second.m_r()) return send_error(res, 404, "unknown image");
        img = &it->second.versions[v];
      } else {
        auto it = by_id->find(head);
        if (it == by_id->end()) return send_error(res, 404, "unknown image");
        std::string file;
        if (tail == "motion") {
          file = it->second->motion_file;
        } else if (tail.size() > 1 && tail[0] == 'v') {
          const int v = std::stoi(tail.substr(1));
          if (v < 1 || v > static_cast<int>(it->second->version_files.size()))
            return send_error(res, 404, "unknown image");
          file = it->second->version_files[v - 1];
        } else {
          return send_error(res, 404, "unknown image");
        }
        loaded = io::read_img(config_.dataset_dir / file).image;
        img = &loaded;
      }
    } catch (const std::invalid_argument&) {
      return send_error(res, 404, "unknown image");
    } catch (const std::out_of_range&) {
      return send_error(res, 404, "unknown image");
    } catch (const IoError& e) {
      return send_error(res, 500, e.what());
    }
    const Windowing w = full_range_window(img->pixels);
    Png16 png{img->pixels.cols(), img->pixels.rows(), quantize(img->pixels, w)};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", w.offset);
    res.set_header("X-Intensity-Offset", buf);
    std::snprintf(buf, sizeof buf, "%.17g", w.scale);
    res.set_header("X-Intensity-Scale", buf);
    res.set_content(encode_png16(png), "image/png");
  });
}

}  // namespace mriq::service
