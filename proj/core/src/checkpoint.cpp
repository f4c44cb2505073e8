#include "graphtext/checkpoint.hpp"

#include "config_json.hpp"
#include "graphtext/binary_io.hpp"
#include "graphtext/errors.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

namespace graphtext {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "CGCKPT1";

json loss_array(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  return out;
}

std::vector<double> read_losses(const json& manifest, const char* key) {
  auto it = manifest.find(key);
  if (it == manifest.end() || !it->is_array()) throw DataError(std::string("manifest lacks '") + key + "'");
  std::vector<double> out;
  for (const auto& v : *it) {
    if (v.is_null()) out.push_back(std::numeric_limits<double>::quiet_NaN());
    else if (v.is_number()) out.push_back(v.get<double>());
    else throw DataError(std::string("manifest '") + key + "' holds a non-number");
  }
  return out;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const JointModel& m = ckpt.model;
  json manifest{
      {"config", detail::train_config_json(m.config)},
      {"epoch", ckpt.epoch},
      {"train_loss", loss_array(ckpt.train_loss)},
      {"val_loss", loss_array(ckpt.val_loss)},
      {"tokenizer", {{"mode", std::string(tokenizer_mode_name(m.tokenizer.mode()))}, {"vocab", m.tokenizer.vocab()}}},
  };
  const std::string text = manifest.dump();

  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  const auto params = m.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    if (p->name.size() > 0xffff) throw ConfigError("parameter name too long: " + p->name);
    w.u16(static_cast<std::uint16_t>(p->name.size()));
    w.bytes(p->name);
    w.u8(2);
    w.u32(static_cast<std::uint32_t>(p->value.rows()));
    w.u32(static_cast<std::uint32_t>(p->value.cols()));
    for (Index i = 0; i < p->value.size(); ++i) w.f32(static_cast<float>(p->value.data()[i]));
  }
  return w.buffer();
}

Checkpoint deserialize_checkpoint(std::string_view bytes, const std::string& what) {
  io::ByteReader r(bytes, what);
  if (r.bytes(kMagic.size()) != kMagic) throw DataError(what + " is not a checkpoint (bad magic)");
  const std::uint32_t manifest_len = r.u32();
  const std::string_view manifest_text = r.bytes(manifest_len);

  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::exception&) {
    throw DataError(what + " has a corrupt manifest");
  }
  if (!manifest.is_object() || !manifest.contains("config") || !manifest.contains("tokenizer") ||
      !manifest.contains("epoch") || !manifest["epoch"].is_number_integer()) {
    throw DataError(what + " has an incomplete manifest");
  }

  Checkpoint out;
  TrainConfig config;
  Tokenizer tokenizer;
  try {
    config = detail::train_config_from(manifest["config"], "config", false);
    const json& tok = manifest["tokenizer"];
    if (!tok.is_object() || !tok.contains("mode") || !tok.contains("vocab") || !tok["mode"].is_string() ||
        !tok["vocab"].is_array()) {
      throw DataError("manifest tokenizer is malformed");
    }
    std::vector<std::string> vocab;
    for (const auto& t : tok["vocab"]) {
      if (!t.is_string()) throw DataError("manifest vocabulary holds a non-string");
      vocab.push_back(t.get<std::string>());
    }
    tokenizer = Tokenizer(std::move(vocab), parse_tokenizer_mode(tok["mode"].get<std::string>()));
    out.train_loss = read_losses(manifest, "train_loss");
    out.val_loss = read_losses(manifest, "val_loss");
  } catch (const Error& e) {
    throw DataError(what + ": " + e.what());
  }
  out.epoch = manifest["epoch"].get<int>();

  // Tensors are staged before the model is touched, so a bad file never
  // leaves partially loaded state behind.
  struct Tensor {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> data;
  };
  std::unordered_map<std::string, Tensor> tensors;
  const std::uint32_t count = r.u32();
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint16_t name_len = r.u16();
    std::string name(r.bytes(name_len));
    const std::uint8_t rank = r.u8();
    if (rank != 2) throw DataError(what + ": tensor " + name + " has unsupported rank " + std::to_string(rank));
    Tensor tensor;
    tensor.rows = r.u32();
    tensor.cols = r.u32();
    const std::uint64_t n = static_cast<std::uint64_t>(tensor.rows) * tensor.cols;
    if (n * 4 > r.remaining()) throw DataError(what + " is truncated inside tensor " + name);
    tensor.data.resize(n);
    for (auto& v : tensor.data) v = r.f32();
    if (!tensors.emplace(name, std::move(tensor)).second) throw DataError(what + ": duplicate tensor " + name);
  }
  if (r.remaining() != 0) throw DataError(what + " has trailing bytes");

  try {
    out.model = JointModel(config, tokenizer);
  } catch (const Error& e) {
    throw DataError(what + ": " + e.what());
  }
  const ParameterRefs params = out.model.parameters();
  if (params.size() != tensors.size()) {
    throw DataError(what + " holds " + std::to_string(tensors.size()) + " tensors; the model has " +
                    std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) throw DataError(what + " lacks tensor " + p->name);
    const Tensor& t = it->second;
    if (t.rows != p->value.rows() || t.cols != p->value.cols()) {
      throw DataError(what + ": shape mismatch for " + p->name + " (file " + std::to_string(t.rows) + "x" +
                      std::to_string(t.cols) + ", model " + std::to_string(p->value.rows()) + "x" +
                      std::to_string(p->value.cols()) + ")");
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      if (!std::isfinite(t.data[i])) throw DataError(what + ": tensor " + p->name + " holds non-finite values");
      p->value.data()[i] = static_cast<double>(t.data[i]);
    }
  }
  return out;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  io::write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(io::read_file(path), path.filename().string());
}

}  // namespace graphtext
