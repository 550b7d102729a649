#include "xlgen/text.hpp"

namespace xlgen::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

}  // namespace

char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + extra >= s.size()) {
    ++pos;
    return kReplacement;
  }
  for (int i = 1; i <= extra; ++i) {
    const auto byte = static_cast<unsigned char>(s[pos + i]);
    if ((byte & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (byte & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    // '_' is a word character so that synthetic tokens like "aa_12" survive.
    return cp != '_' && ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
                         (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E));
  }
  return (cp >= 0x00A1 && cp <= 0x00BF && cp != 0x00AA && cp != 0x00B5 &&
          cp != 0x00BA) ||
         cp == 0x0964 || cp == 0x0965 ||        // danda, double danda
         (cp >= 0x2010 && cp <= 0x2027) ||      // general punctuation
         (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003) ||      // 、。〃
         (cp >= 0x3008 && cp <= 0x3011) ||      // CJK brackets
         (cp >= 0x3014 && cp <= 0x301F) ||
         cp == 0x30FB ||                        // katakana middle dot
         (cp >= 0xFF01 && cp <= 0xFF0F) ||      // fullwidth forms
         (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) ||
         (cp >= 0xFF5B && cp <= 0xFF65);
}

bool is_valid_utf8(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t before = pos;
    const char32_t cp = next_code_point(s, pos);
    if (cp == kReplacement) {
      // A literal U+FFFD is three bytes: EF BF BD.
      if (pos - before != 3) return false;
    }
  }
  return true;
}

std::string_view trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t first_non_space = s.size();
  std::size_t last_end = 0;
  while (begin < s.size()) {
    const std::size_t start = begin;
    const char32_t cp = next_code_point(s, begin);
    if (!is_space(cp)) {
      if (first_non_space == s.size()) first_non_space = start;
      last_end = begin;
    }
  }
  if (first_non_space == s.size()) return {};
  return s.substr(first_non_space, last_end - first_non_space);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t start = pos;
    const char32_t cp = next_code_point(s, pos);
    if (is_space(cp)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.append(s.substr(start, pos - start));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  return join(split_whitespace(s), " ");
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string strip_whitespace(std::string_view s) {
  std::string out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t start = pos;
    if (!is_space(next_code_point(s, pos))) out.append(s.substr(start, pos - start));
  }
  return out;
}

}  // namespace xlgen::text
