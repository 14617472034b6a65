#pragma once

// HYQR1 parameter container:
//
//   bytes 0..4   magic "HYQR1"
//   bytes 5..12  header length N, unsigned 64-bit little-endian
//   next N bytes JSON header:
//                {"format": "HYQR1", "meta": {...},
//                 "tensors": [{"name", "dtype": "float64", "shape": [rows, cols],
//                              "offset", "nbytes"}, ...]}
//   payload      row-major little-endian float64 values; offsets are relative
//                to the first payload byte

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyq/autodiff.hpp"

namespace hyq::ad {

inline constexpr char kCheckpointMagic[] = "HYQR1";

struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params, const nlohmann::json& meta);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Copies values by name; every parameter must be present with a matching shape.
void load_into(ParameterSet& params, const Checkpoint& ckpt);

}  // namespace hyq::ad
