#pragma once

#include "graphtext/trainer.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace graphtext {

/// Layout: magic "CGCKPT1", u32 manifest length, UTF-8 JSON manifest
/// (config, tokenizer, epoch, loss history), u32 tensor count, then per
/// tensor: u16 name length, name, u8 rank, u32 dims, little-endian float32
/// payload.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws DataError on truncation, a corrupt manifest or any tensor whose
/// name or shape does not match the model described by the manifest.
Checkpoint deserialize_checkpoint(std::string_view bytes, const std::string& what = "checkpoint");

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace graphtext
