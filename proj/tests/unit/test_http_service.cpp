#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>
#include <set>
#include <thread>
#include <unistd.h>

#include "mriq/dataset.hpp"
#include "mriq/error.hpp"
#include "mriq/image_io.hpp"
#include "mriq/service/http_service.hpp"
#include "mriq/service/png16.hpp"

// After the project headers: it pulls in <resolv.h>, whose _res macro
// breaks Eigen.
#include <httplib.h>

using namespace mriq;
using namespace mriq::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path& data_root() {
  static const fs::path root = [] {
    // Per process: ctest may run the cases of this file in parallel.
    const fs::path dir = fs::temp_directory_path() / ("mriq_http_data_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    DatasetConfig c;
    c.n_train = 6;
    c.n_val = 2;
    c.n_test = 2;
    c.slices_per_subject = 2;
    c.size = 32;
    c.n_coils = 2;
    c.seed = 11;
    build_dataset(c, dir / "data");
    RulerRegistry reg;
    for (const std::string type : {"knee-fs", "knee-nfs"}) reg[type] = build_dataset_ruler(c, type, 8, {8, 34});
    save_registry(dir / "rulers", reg);
    return dir;
  }();
  return root;
}

class HttpService : public ::testing::Test {
 protected:
  void SetUp() override {
    const fs::path store = data_root() / (std::string("store_") +
                                          ::testing::UnitTest::GetInstance()->current_test_info()->name()) /
                           "labels.json";
    fs::remove_all(store.parent_path());
    service_ = std::make_unique<LabelService>(ServiceConfig{data_root() / "data", data_root() / "rulers", store});
    const int port = service_->bind("127.0.0.1", 0);
    server_ = std::thread([this] { service_->run(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port);
    manifest_ = read_manifest(data_root() / "data" / "manifest.json");
  }
  void TearDown() override {
    service_->stop();
    server_.join();
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  std::unique_ptr<LabelService> service_;
  std::thread server_;
  std::unique_ptr<httplib::Client> client_;
  DatasetManifest manifest_;
};

}  // namespace

TEST_F(HttpService, SetLabelRangeIsEnforced) {
  const std::string id = manifest_.entries.front().slice_id;
  auto ok = post("/api/sets/" + id + "/label", {{"h", 4}, {"rater", "r1"}});
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(service_->store().pick(id, "r1")->h, 4);

  auto bad = post("/api/sets/" + id + "/label", {{"h", 7}, {"rater", "r1"}});
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  EXPECT_NE(json::parse(bad->body).at("error").get<std::string>().find("[0, 6]"), std::string::npos);
  EXPECT_EQ(service_->store().pick(id, "r1")->h, 4);

  EXPECT_EQ(post("/api/sets/" + id + "/label", {{"h", "4"}})->status, 422);
  EXPECT_EQ(client_->Post("/api/sets/" + id + "/label", "{oops", "application/json")->status, 422);
}

TEST_F(HttpService, GetSetDescribesVersions) {
  const SliceRecord& r = manifest_.entries.front();
  auto res = client_->Get("/api/sets/" + r.slice_id);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const json j = json::parse(res->body);
  EXPECT_EQ(j.at("id"), r.slice_id);
  EXPECT_EQ(j.at("scan_type"), r.scan_type);
  EXPECT_EQ(j.at("versions").size(), 5u);
  EXPECT_EQ(j.at("choices").at("max"), 6);
  EXPECT_EQ(j.at("versions")[0].at("image"), "/api/images/" + r.slice_id + "_v1");
}

TEST_F(HttpService, UnknownThingsAre404) {
  EXPECT_EQ(client_->Get("/api/sets/nope")->status, 404);
  EXPECT_EQ(post("/api/sets/nope/label", {{"h", 1}})->status, 404);
  EXPECT_EQ(client_->Get("/api/rulers/spine-fs")->status, 404);
  EXPECT_EQ(post("/api/rulers/spine-fs/threshold", {{"t_a", 1}, {"t_b", 2}})->status, 404);
  EXPECT_EQ(post("/api/test/nope_v1/label", {{"rs", 1}, {"pf", true}})->status, 404);
  EXPECT_EQ(client_->Get("/api/images/nope_v1")->status, 404);
  EXPECT_EQ(client_->Get("/api/images/ruler-knee-fs_v8")->status, 404);
  EXPECT_EQ(client_->Get("/api/images/" + manifest_.entries[0].slice_id + "_v9")->status, 404);
  EXPECT_EQ(client_->Get("/api/images/" + manifest_.entries[0].slice_id + "_vx")->status, 404);
  // Test slices are not calibration sets.
  for (const auto& e : manifest_.entries)
    if (e.split == Split::kTest) EXPECT_EQ(client_->Get("/api/sets/" + e.slice_id)->status, 404);
}

TEST_F(HttpService, ThresholdValidation) {
  EXPECT_EQ(post("/api/rulers/knee-fs/threshold", {{"t_a", 4}, {"t_b", 2}})->status, 422);
  EXPECT_EQ(post("/api/rulers/knee-fs/threshold", {{"t_a", 2}, {"t_b", 8}})->status, 422);
  EXPECT_EQ(post("/api/rulers/knee-fs/threshold", {{"t_a", 2}})->status, 422);
  auto ok = post("/api/rulers/knee-fs/threshold", {{"t_a", 2}, {"t_b", 4}, {"rater", "r1"}});
  ASSERT_EQ(ok->status, 200);
  const json j = json::parse(client_->Get("/api/rulers/knee-fs")->body);
  EXPECT_EQ(j.at("threshold").at("t_a"), 2);
  EXPECT_EQ(j.at("threshold").at("t_b"), 4);
  EXPECT_EQ(j.at("m_r"), 8);
  EXPECT_EQ(j.at("versions").size(), 8u);
  const json other = json::parse(client_->Get("/api/rulers/knee-nfs")->body);
  EXPECT_EQ(other.at("threshold").at("t_a"), 3);  // default
  EXPECT_EQ(json::parse(client_->Get("/api/rulers")->body).size(), 2u);
}

TEST_F(HttpService, NextSetWalksQueueUntilEmpty) {
  EXPECT_EQ(client_->Get("/api/sets/next")->status, 422);
  std::set<std::string> seen;
  int expected = 0;
  for (const auto& e : manifest_.entries) expected += e.split != Split::kTest;
  for (int i = 0; i < expected; ++i) {
    auto res = client_->Get("/api/sets/next?rater=r9");
    ASSERT_EQ(res->status, 200);
    const std::string id = json::parse(res->body).at("id");
    EXPECT_TRUE(seen.insert(id).second) << id;
    ASSERT_EQ(post("/api/sets/" + id + "/label", {{"h", 3}, {"rater", "r9"}})->status, 200);
  }
  EXPECT_EQ(client_->Get("/api/sets/next?rater=r9")->status, 204);
  // Another rater still has the whole queue.
  EXPECT_EQ(client_->Get("/api/sets/next?rater=r10")->status, 200);
}

TEST_F(HttpService, TestQueueUsesMatchingRuler) {
  EXPECT_EQ(client_->Get("/api/test/next")->status, 422);
  int n_test = 0;
  for (const auto& e : manifest_.entries) n_test += (e.split == Split::kTest) * 5;
  for (int i = 0; i < n_test; ++i) {
    auto res = client_->Get("/api/test/next?rater=r1");
    ASSERT_EQ(res->status, 200);
    const json j = json::parse(res->body);
    EXPECT_EQ(j.at("m_r"), 8);
    const std::string type = j.at("scan_type");
    const bool fs_type = type.ends_with("-fs");
    EXPECT_EQ(j.at("ruler"), fs_type ? "knee-fs" : "knee-nfs");
    const std::string id = j.at("id");
    EXPECT_EQ(post("/api/test/" + id + "/label", {{"rs", 8}, {"pf", true}, {"rater", "r1"}})->status, 422);
    EXPECT_EQ(post("/api/test/" + id + "/label", {{"rs", 2}, {"pf", 1}, {"rater", "r1"}})->status, 422);
    ASSERT_EQ(post("/api/test/" + id + "/label", {{"rs", 2}, {"pf", false}, {"rater", "r1"}})->status, 200);
  }
  EXPECT_EQ(client_->Get("/api/test/next?rater=r1")->status, 204);
}

TEST_F(HttpService, ImagesRoundTripLosslesslyThroughPng) {
  const SliceRecord& r = manifest_.entries.front();
  const RealImage original = io::read_img(data_root() / "data" / r.version_files[2]).image.pixels;
  auto res = client_->Get("/api/images/" + r.slice_id + "_v3");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  const Windowing w{std::stod(res->get_header_value("X-Intensity-Offset")),
                    std::stod(res->get_header_value("X-Intensity-Scale"))};
  const Png16 png = decode_png16(res->body);
  ASSERT_EQ(png.width, original.cols());
  ASSERT_EQ(png.height, original.rows());
  EXPECT_EQ(png.codes, quantize(original, w));
  const RealImage back = dequantize(png.codes, png.height, png.width, w);
  for (std::size_t i = 0; i < original.size(); ++i) EXPECT_LE(std::abs(back[i] - original[i]), 0.5 * w.scale + 1e-12);

  for (const std::string id : {r.slice_id + "_motion", std::string("ruler-knee-nfs_v0"), std::string("ruler-knee-nfs_v7")})
    EXPECT_EQ(client_->Get("/api/images/" + id)->status, 200) << id;
}

TEST(Png16, EncodeDecodeIsExact) {
  Png16 img{7, 5, {}};
  for (int i = 0; i < 35; ++i) img.codes.push_back(static_cast<std::uint16_t>(i * 1871 % 65536));
  img.codes[3] = 65535;
  const Png16 back = decode_png16(encode_png16(img));
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(back.codes, img.codes);
  EXPECT_THROW(decode_png16("not a png"), IoError);
}

TEST(Png16, FullRangeWindowHitsBothEnds) {
  RealImage img(2, 2);
  img[0] = -3;
  img[1] = 0;
  img[2] = 7;
  img[3] = 1;
  const Windowing w = full_range_window(img);
  const auto codes = quantize(img, w);
  EXPECT_EQ(codes[0], 0);
  EXPECT_EQ(codes[2], 65535);
  RealImage flat(2, 2);
  EXPECT_EQ(full_range_window(flat).scale, 1.0);
}
