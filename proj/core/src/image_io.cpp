#include "mriq/image_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "mriq/error.hpp"

namespace mriq::io {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_f32(std::vector<char>& buf, double v) {
  float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  buf.insert(buf.end(), bytes, bytes + 4);
}

double get_f32(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void write_file(const std::filesystem::path& path, const std::string& head, const std::vector<char>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

void write_kset(const std::filesystem::path& path, const KSpaceVolume& k) {
  validate(k);
  json order = json::array();
  for (const auto& slot : k.acquisition_order) order.push_back({slot.shot, slot.line});
  json header = {{"magic", "KSET1"},       {"height", k.rows()},
                 {"width", k.cols()},      {"n_coils", k.n_coils()},
                 {"etl", k.echo_train_length}, {"acquisition_order", order},
                 {"scan_type", k.scan_type}};
  std::vector<char> body;
  body.reserve(static_cast<std::size_t>(k.n_coils()) * k.rows() * k.cols() * 8);
  for (const auto& coil : k.coils)
    for (const auto& v : coil.values()) {
      put_f32(body, v.real());
      put_f32(body, v.imag());
    }
  write_file(path, header.dump() + "\n", body);
}

KSpaceVolume read_kset(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_all(path);
  const auto newline = std::find(bytes.begin(), bytes.end(), '\n');
  if (newline == bytes.end()) throw IoError("KSET header missing: " + path.string());
  json header;
  try {
    header = json::parse(bytes.begin(), newline);
  } catch (const json::exception& e) {
    throw IoError("KSET header is not JSON: " + path.string() + ": " + e.what());
  }
  if (header.value("magic", "") != "KSET1") throw IoError("not a KSET1 file: " + path.string());
  KSpaceVolume k;
  const int h = header.at("height"), w = header.at("width"), nc = header.at("n_coils");
  if (h <= 0 || w <= 0 || nc <= 0) throw IoError("KSET header has invalid dimensions: " + path.string());
  k.echo_train_length = header.at("etl");
  k.scan_type = header.value("scan_type", "");
  for (const auto& slot : header.at("acquisition_order")) k.acquisition_order.push_back({slot.at(0), slot.at(1)});
  const std::size_t offset = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  const std::size_t expected = static_cast<std::size_t>(nc) * h * w * 8;
  if (bytes.size() - offset != expected) throw IoError("KSET payload size mismatch: " + path.string());
  const char* p = bytes.data() + offset;
  for (int c = 0; c < nc; ++c) {
    ComplexImage coil(h, w);
    for (auto& v : coil.values()) {
      v = Complex(get_f32(p), get_f32(p + 4));
      p += 8;
    }
    k.coils.push_back(std::move(coil));
  }
  validate(k);
  return k;
}

std::filesystem::path sidecar_path(const std::filesystem::path& img_path) {
  auto p = img_path;
  p.replace_extension(".json");
  return p;
}

void write_img(const std::filesystem::path& img_path, const MagnitudeImage& image, const Provenance& provenance) {
  json meta = {{"slice_id", image.slice_id},
               {"scan_type", image.scan_type},
               {"version", image.version},
               {"height", image.pixels.rows()},
               {"width", image.pixels.cols()},
               {"provenance", provenance}};
  std::vector<char> body;
  body.reserve(image.pixels.size() * 4);
  for (double v : image.pixels.values()) put_f32(body, v);
  write_file(img_path, "", body);
  write_file(sidecar_path(img_path), meta.dump(2) + "\n", {});
}

ImgRecord read_img(const std::filesystem::path& img_path) {
  json meta;
  {
    const auto text = read_all(sidecar_path(img_path));
    try {
      meta = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
      throw IoError("IMG sidecar is not JSON: " + sidecar_path(img_path).string() + ": " + e.what());
    }
  }
  ImgRecord rec;
  const int h = meta.at("height"), w = meta.at("width");
  rec.image.slice_id = meta.value("slice_id", "");
  rec.image.scan_type = meta.value("scan_type", "");
  rec.image.version = meta.value("version", 0);
  if (meta.contains("provenance")) rec.provenance = meta.at("provenance").get<Provenance>();
  const auto bytes = read_all(img_path);
  if (h <= 0 || w <= 0 || bytes.size() != static_cast<std::size_t>(h) * w * 4)
    throw IoError("IMG payload size mismatch: " + img_path.string());
  rec.image.pixels = RealImage(h, w);
  for (std::size_t i = 0; i < rec.image.pixels.size(); ++i) rec.image.pixels[i] = get_f32(bytes.data() + 4 * i);
  return rec;
}

void round_to_f32(RealImage& img) {
  for (auto& v : img.values()) v = static_cast<float>(v);
}

}  // namespace mriq::io
