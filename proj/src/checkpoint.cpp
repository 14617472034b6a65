#include "hyq/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "hyq/error.hpp"

namespace hyq::ad {

namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params, const nlohmann::json& meta) {
  nlohmann::json header;
  header["format"] = kCheckpointMagic;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  std::string payload;
  for (const auto& p : params) {
    const auto nbytes = static_cast<std::uint64_t>(p.value.size()) * 8;
    header["tensors"].push_back({{"name", p.name},
                                 {"dtype", "float64"},
                                 {"shape", {p.value.rows(), p.value.cols()}},
                                 {"offset", payload.size()},
                                 {"nbytes", nbytes}});
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put_u64(payload, std::bit_cast<std::uint64_t>(p.value.data()[i]));
  }
  const std::string text = header.dump();
  std::string blob(kCheckpointMagic, kMagicSize);
  put_u64(blob, text.size());
  blob += text;
  blob += payload;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint '" + path.string() + "'");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw ValidationError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path.string() + "'");
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < kMagicSize + 8 || blob.compare(0, kMagicSize, kCheckpointMagic) != 0) {
    throw ValidationError("'" + path.string() + "' is not a HYQR1 checkpoint");
  }
  const auto header_len = get_u64(blob.data() + kMagicSize);
  const auto payload_start = kMagicSize + 8 + header_len;
  if (payload_start > blob.size()) throw ValidationError("truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(kMagicSize + 8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& t : header.at("tensors")) {
    if (t.at("dtype") != "float64") throw ValidationError("unsupported checkpoint dtype");
    const auto rows = t.at("shape")[0].get<Eigen::Index>();
    const auto cols = t.at("shape")[1].get<Eigen::Index>();
    const auto offset = t.at("offset").get<std::uint64_t>();
    const auto nbytes = static_cast<std::uint64_t>(rows * cols) * 8;
    if (payload_start + offset + nbytes > blob.size()) throw ValidationError("truncated checkpoint payload");
    Matrix m(rows, cols);
    const char* p = blob.data() + payload_start + offset;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(get_u64(p + 8 * i));
    ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  return ckpt;
}

void load_into(ParameterSet& params, const Checkpoint& ckpt) {
  for (auto& p : params) {
    auto it = std::find_if(ckpt.tensors.begin(), ckpt.tensors.end(), [&](const auto& t) { return t.first == p.name; });
    if (it == ckpt.tensors.end()) throw ValidationError("checkpoint lacks parameter '" + p.name + "'");
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw DimensionError("checkpoint shape mismatch for '" + p.name + "'");
    }
    p.value = it->second;
  }
}

}  // namespace hyq::ad
