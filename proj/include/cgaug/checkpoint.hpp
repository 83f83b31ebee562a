#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace cgaug {

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

// Weight blob: a JSON header line listing {name, shape, offset} per array,
// followed by the concatenated little-endian float32 payload.
void save_tensors(const NamedTensors& tensors, const std::filesystem::path& path);
NamedTensors load_tensors(const std::filesystem::path& path);

// Parameters and buffers of a module, in registration order.
NamedTensors module_state(const torch::nn::Module& module);

// Copies a blob into a module; names and shapes must match exactly.
void save_module(const torch::nn::Module& module, const std::filesystem::path& path);
void load_module(torch::nn::Module& module, const std::filesystem::path& path);

// Copies every parameter/buffer of `src` whose name and shape exist in `dst`.
// Returns the number of tensors copied.
int copy_matching_state(const torch::nn::Module& src, torch::nn::Module& dst);

}  // namespace cgaug
