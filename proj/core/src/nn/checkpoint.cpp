#include "mriq/nn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <json.hpp>

#include "mriq/error.hpp"
#include "mriq/hash.hpp"

namespace mriq::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr const char* kMagic = "MRIQCKPT1";

nlohmann::json config_to_json(const NetConfig& c) {
  return {{"input_size", c.input_size},
          {"trunk_channels", c.trunk_channels},
          {"trunk_kernels", c.trunk_kernels},
          {"branch_channels", c.branch_channels},
          {"branch_kernel", c.branch_kernel},
          {"noise_branch", c.noise_branch},
          {"motion_branch", c.motion_branch}};
}

NetConfig config_from_json(const nlohmann::json& j) {
  NetConfig c;
  c.input_size = j.at("input_size").get<int>();
  c.trunk_channels = j.at("trunk_channels").get<std::array<int, 3>>();
  c.trunk_kernels = j.at("trunk_kernels").get<std::array<int, 3>>();
  c.branch_channels = j.at("branch_channels").get<int>();
  c.branch_kernel = j.at("branch_kernel").get<int>();
  c.noise_branch = j.at("noise_branch").get<bool>();
  c.motion_branch = j.at("motion_branch").get<bool>();
  return c;
}

// Every array in file order: parameters, then buffers.
std::vector<std::pair<std::string, std::vector<double>*>> arrays(DualTaskNet& net) {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  for (auto* p : net.parameters()) out.emplace_back(p->name, &p->value);
  for (auto& b : net.buffers()) out.push_back(b);
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DualTaskNet& net, std::uint64_t training_seed,
                     const std::string& manifest_hash) {
  auto& mut = const_cast<DualTaskNet&>(net);
  nlohmann::json header;
  header["config"] = config_to_json(net.config());
  header["training_seed"] = training_seed;
  header["manifest_hash"] = manifest_hash;
  nlohmann::json table = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, values] : arrays(mut)) {
    table.push_back({{"name", name}, {"count", values->size()}, {"offset", offset}});
    offset += values->size() * sizeof(float);
  }
  header["tensors"] = table;

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << kMagic << '\n' << header.dump() << '\n';
    for (const auto& [name, values] : arrays(mut)) {
      std::vector<float> f(values->begin(), values->end());
      out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic, line;
  std::getline(in, magic);
  if (magic != kMagic) throw IoError("not a checkpoint: " + path.string());
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  const auto data_start = in.tellg();
  Checkpoint ck{DualTaskNet(config_from_json(header.at("config"))), header.at("training_seed").get<std::uint64_t>(),
                header.at("manifest_hash").get<std::string>()};
  std::map<std::string, nlohmann::json> table;
  for (const auto& t : header.at("tensors")) table[t.at("name").get<std::string>()] = t;
  for (auto& [name, values] : arrays(ck.net)) {
    auto it = table.find(name);
    if (it == table.end()) throw IoError("checkpoint lacks tensor " + name);
    if (it->second.at("count").get<std::size_t>() != values->size())
      throw IoError("checkpoint tensor " + name + " has the wrong size");
    in.seekg(data_start + static_cast<std::streamoff>(it->second.at("offset").get<std::size_t>()));
    std::vector<float> f(values->size());
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!in) throw IoError("truncated checkpoint " + path.string());
    std::copy(f.begin(), f.end(), values->begin());
  }
  return ck;
}

std::string checkpoint_hash(const std::filesystem::path& path) { return sha256_file(path); }

}  // namespace mriq::nn
