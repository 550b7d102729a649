#include "xlgen/records.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "xlgen/error.hpp"
#include "xlgen/language.hpp"

namespace xlgen {

std::string to_json_line(const TextPair& pair) {
  nlohmann::ordered_json j;
  j["src"] = pair.src;
  j["tgt"] = pair.tgt;
  j["src_lang"] = pair.src_lang;
  j["tgt_lang"] = pair.tgt_lang;
  return j.dump();
}

TextPair parse_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed JSONL record: ") + e.what());
  }
  if (!j.is_object() || j.size() != 4) {
    throw DataError("JSONL record must be an object with exactly src, tgt, src_lang, tgt_lang");
  }
  TextPair pair;
  auto field = [&](const char* key, std::string& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw DataError(std::string("JSONL record: missing string field '") + key + "'");
    }
    out = it->get<std::string>();
  };
  field("src", pair.src);
  field("tgt", pair.tgt);
  field("src_lang", pair.src_lang);
  field("tgt_lang", pair.tgt_lang);
  if (!is_valid_language_code(pair.src_lang) || !is_valid_language_code(pair.tgt_lang)) {
    throw DataError("JSONL record: invalid language code");
  }
  return pair;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<TextPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : pairs) out << to_json_line(p) << '\n';
}

std::vector<TextPair> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<TextPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      pairs.push_back(parse_json_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pairs;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace xlgen
