#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xlgen {

/// One line of a training/evaluation data file:
/// {"src": ..., "tgt": ..., "src_lang": ..., "tgt_lang": ...}
struct TextPair {
  std::string src;
  std::string tgt;
  std::string src_lang;
  std::string tgt_lang;

  bool operator==(const TextPair&) const = default;
};

std::string to_json_line(const TextPair& pair);

/// Throws DataError on malformed JSON, missing or extra fields, or an
/// invalid language code.
TextPair parse_json_line(std::string_view line);

void write_jsonl(const std::filesystem::path& path, const std::vector<TextPair>& pairs);

std::vector<TextPair> read_jsonl(const std::filesystem::path& path);

/// Plain line-delimited text (hypothesis/reference files).
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace xlgen
