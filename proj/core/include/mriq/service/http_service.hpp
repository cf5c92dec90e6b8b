#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "mriq/dataset.hpp"
#include "mriq/ruler.hpp"
#include "mriq/service/label_store.hpp"

namespace httplib {
class Server;
}

namespace mriq::service {

struct ServiceConfig {
  std::filesystem::path dataset_dir;  // holds manifest.json and images/
  std::filesystem::path rulers_dir;   // optional ruler registry
  std::filesystem::path label_store;  // store file
};

/// JSON API behind the labeling UI. Image ids: "<slice>_v<k>",
/// "<slice>_motion" and "ruler-<scan_type>_v<k>".
class LabelService {
 public:
  explicit LabelService(const ServiceConfig& config);
  ~LabelService();
  LabelService(const LabelService&) = delete;
  LabelService& operator=(const LabelService&) = delete;

  /// Binds and serves until stop(); port 0 picks a free port, reported by
  /// port() once listening.
  void listen(const std::string& host, int port);
  /// Binds synchronously and returns the port; serve with run().
  int bind(const std::string& host, int port);
  void run();
  void stop();
  int port() const { return port_; }

  LabelStore& store() { return *store_; }

 private:
  void routes();

  ServiceConfig config_;
  DatasetManifest manifest_;
  RulerRegistry rulers_;
  std::unique_ptr<LabelStore> store_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
};

}  // namespace mriq::service
