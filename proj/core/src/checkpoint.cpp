#include "slscom/checkpoint.hpp"

#include <fstream>
#include <json.hpp>
#include <map>

namespace slscom {

namespace {

using nlohmann::json;

constexpr char kMagic[9] = "SLSCKPT1";

struct ArchiveEntry {
  std::vector<long> shape;
  std::vector<double> data;
};

json build_manifest(const CheckpointMeta& meta,
                    const std::vector<std::pair<std::string, const ag::Tensor*>>& arrays) {
  json m;
  m["component"] = meta.component;
  m["preset"] = meta.preset;
  m["config_fingerprint"] = meta.config_fingerprint;
  json arr = json::array();
  for (const auto& [name, t] : arrays) {
    json e;
    e["name"] = name;
    e["shape"] = t->shape;
    arr.push_back(e);
  }
  m["arrays"] = arr;
  return m;
}

std::vector<std::pair<std::string, ag::Tensor*>> module_arrays(nn::Module& module) {
  std::vector<std::pair<std::string, ag::Tensor*>> out;
  for (auto& p : module.parameters()) out.emplace_back(p.name, &p.var->value);
  for (auto& b : module.named_buffers()) out.emplace_back(b.name, b.tensor);
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     nn::Module& module) {
  auto arrays = module_arrays(module);
  std::vector<std::pair<std::string, const ag::Tensor*>> carrays;
  for (auto& [n, t] : arrays) carrays.emplace_back(n, t);
  json manifest = build_manifest(meta, carrays);
  std::string mtext = manifest.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot write checkpoint: " + path);
  f.write(kMagic, 8);
  std::uint64_t mlen = mtext.size();
  f.write(reinterpret_cast<const char*>(&mlen), 8);
  f.write(mtext.data(), static_cast<std::streamsize>(mlen));
  for (auto& [name, t] : arrays)
    f.write(reinterpret_cast<const char*>(t->data.data()),
            static_cast<std::streamsize>(t->size() * sizeof(double)));
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingCheckpoint("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != std::string(kMagic, 8))
    throw CheckpointError(path + ": bad checkpoint magic");
  std::uint64_t mlen = 0;
  f.read(reinterpret_cast<char*>(&mlen), 8);
  std::string mtext(mlen, '\0');
  f.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!f) throw CheckpointError(path + ": truncated manifest");
  json m = json::parse(mtext);
  CheckpointMeta meta;
  meta.component = m.value("component", "");
  meta.preset = m.value("preset", "");
  meta.config_fingerprint = m.value("config_fingerprint", 0ull);
  return meta;
}

CheckpointMeta load_checkpoint(const std::string& path, nn::Module& module) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingCheckpoint("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != std::string(kMagic, 8))
    throw CheckpointError(path + ": bad checkpoint magic");
  std::uint64_t mlen = 0;
  f.read(reinterpret_cast<char*>(&mlen), 8);
  std::string mtext(mlen, '\0');
  f.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!f) throw CheckpointError(path + ": truncated manifest");
  json m = json::parse(mtext);

  std::map<std::string, ArchiveEntry> entries;
  std::vector<std::string> order;
  for (const auto& e : m.at("arrays")) {
    ArchiveEntry a;
    a.shape = e.at("shape").get<std::vector<long>>();
    long n = ag::Tensor::count(a.shape);
    a.data.resize(static_cast<size_t>(n));
    f.read(reinterpret_cast<char*>(a.data.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw CheckpointError(path + ": truncated array data");
    std::string name = e.at("name").get<std::string>();
    entries[name] = std::move(a);
    order.push_back(name);
  }

  for (auto& [name, t] : module_arrays(module)) {
    auto it = entries.find(name);
    if (it == entries.end())
      throw CheckpointError(path + ": missing array " + name);
    if (it->second.shape != t->shape)
      throw CheckpointError(path + ": shape mismatch for " + name);
    for (long i = 0; i < t->size(); ++i) t->data[i] = it->second.data[i];
  }

  CheckpointMeta meta;
  meta.component = m.value("component", "");
  meta.preset = m.value("preset", "");
  meta.config_fingerprint = m.value("config_fingerprint", 0ull);
  return meta;
}

}  // namespace slscom
