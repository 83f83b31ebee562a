#include "cgaug/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"

namespace cgaug {

using nlohmann::json;

namespace {
constexpr const char* kWeightsFormat = "cgaug-weights";
}

NamedTensors module_state(const torch::nn::Module& module) {
  NamedTensors out;
  for (const auto& item : module.named_parameters()) out.emplace_back(item.key(), item.value());
  for (const auto& item : module.named_buffers()) out.emplace_back(item.key(), item.value());
  return out;
}

void save_tensors(const NamedTensors& tensors, const std::filesystem::path& path) {
  json arrays = json::array();
  std::int64_t offset = 0;
  std::vector<torch::Tensor> flat;
  for (const auto& [name, t] : tensors) {
    auto f = t.detach().to(torch::kCPU).to(torch::kFloat32).contiguous();
    arrays.push_back({{"name", name}, {"shape", f.sizes().vec()}, {"offset", offset}});
    offset += f.numel();
    flat.push_back(std::move(f));
  }
  const json header{{"format", kWeightsFormat}, {"dtype", "float32-le"}, {"arrays", arrays}};
  std::string bytes = header.dump();
  bytes.push_back('\n');
  bytes.reserve(bytes.size() + static_cast<std::size_t>(offset) * 4);
  for (const auto& f : flat) {
    const float* p = f.data_ptr<float>();
    for (std::int64_t i = 0; i < f.numel(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(p[i]);
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write weights: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights: " + path.string());
  std::string line;
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError("weights header of " + path.string() + ": " + e.what());
  }
  if (header.value("format", "") != kWeightsFormat) {
    throw ValidationError("not a weights file: " + path.string());
  }
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  NamedTensors out;
  for (const auto& a : header.at("arrays")) {
    const auto shape = a.at("shape").get<std::vector<std::int64_t>>();
    const auto offset = a.at("offset").get<std::int64_t>();
    auto t = torch::empty(shape, torch::kFloat32);
    const std::int64_t n = t.numel();
    if (static_cast<std::size_t>((offset + n) * 4) > payload.size()) {
      throw ValidationError("weights payload truncated in " + path.string());
    }
    float* dst = t.data_ptr<float>();
    const unsigned char* src = payload.data() + offset * 4;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(src[4 * i]) |
                                 (static_cast<std::uint32_t>(src[4 * i + 1]) << 8) |
                                 (static_cast<std::uint32_t>(src[4 * i + 2]) << 16) |
                                 (static_cast<std::uint32_t>(src[4 * i + 3]) << 24);
      dst[i] = std::bit_cast<float>(bits);
    }
    out.emplace_back(a.at("name").get<std::string>(), std::move(t));
  }
  return out;
}

void save_module(const torch::nn::Module& module, const std::filesystem::path& path) {
  save_tensors(module_state(module), path);
}

void load_module(torch::nn::Module& module, const std::filesystem::path& path) {
  const auto loaded = load_tensors(path);
  std::map<std::string, torch::Tensor> by_name(loaded.begin(), loaded.end());
  const auto state = module_state(module);
  if (by_name.size() != state.size()) {
    throw ValidationError("weights in " + path.string() + " do not match the architecture (" +
                          std::to_string(by_name.size()) + " arrays vs " + std::to_string(state.size()) + ")");
  }
  torch::NoGradGuard guard;
  for (const auto& [name, dst] : state) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("weights missing array '" + name + "' in " + path.string());
    if (it->second.sizes() != dst.sizes()) {
      throw ShapeError("weights array '" + name + "' has a different shape in " + path.string());
    }
    auto target = dst;
    target.copy_(it->second.to(dst.dtype()));
  }
}

int copy_matching_state(const torch::nn::Module& src, torch::nn::Module& dst) {
  const auto from = module_state(src);
  std::map<std::string, torch::Tensor> by_name(from.begin(), from.end());
  torch::NoGradGuard guard;
  int copied = 0;
  for (auto& [name, t] : module_state(dst)) {
    const auto it = by_name.find(name);
    if (it != by_name.end() && it->second.sizes() == t.sizes()) {
      auto target = t;
      target.copy_(it->second);
      ++copied;
    }
  }
  return copied;
}

}  // namespace cgaug
