#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "xlgen/model.hpp"
#include "xlgen/vocab.hpp"

namespace xlgen {

/// Model + vocabulary + free-form string metadata (phase, freeze policy...).
struct Checkpoint {
  Seq2SeqModel model;
  Vocabulary vocab;
  std::map<std::string, std::string> metadata;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container:
///   "XLGENCKP" | u32 version | u64 header bytes | JSON header | f64 data
/// The JSON header holds the model config, the vocabulary token list, the
/// metadata, and (name, group, rows, cols) for each parameter; the data
/// section is every parameter's values, row-major, little-endian, in
/// header order. Output bytes depend only on the inputs.
void save_checkpoint(const std::filesystem::path& path, const Seq2SeqModel& model,
                     const Vocabulary& vocab,
                     const std::map<std::string, std::string>& metadata = {});

/// Throws DataError for a missing file, bad magic, unsupported version,
/// or a header inconsistent with the data.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xlgen
