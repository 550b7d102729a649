#include "xlgen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json_io.hpp"
#include "xlgen/error.hpp"

namespace xlgen {

namespace {

constexpr char kMagic[8] = {'X', 'L', 'G', 'E', 'N', 'C', 'K', 'P'};

template <typename T>
void write_le(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Seq2SeqModel& model,
                     const Vocabulary& vocab, const std::map<std::string, std::string>& metadata) {
  json_io::ordered_json header;
  header["config"] = json_io::to_json(model.config());
  header["vocabulary"] = vocab.tokens();
  header["metadata"] = metadata;
  auto& params = header["parameters"] = json_io::ordered_json::array();
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name}, {"group", p.group}, {"rows", p.value.rows()},
                      {"cols", p.value.cols()}});
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.parameters()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p.value.data()[i]));
    }
  }
  if (!out) throw DataError("error writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not an xlgen checkpoint: " + path.string());
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_le<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
  try {
    ModelConfig cfg = json_io::model_config_from_json(header.at("config"));
    Vocabulary vocab = Vocabulary::from_tokens(header.at("vocabulary").get<std::vector<std::string>>());
    auto metadata = header.at("metadata").get<std::map<std::string, std::string>>();
    Seq2SeqModel model(cfg);
    const auto& entries = header.at("parameters");
    auto& store = model.parameters();
    if (entries.size() != store.size()) throw DataError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& e = entries[i];
      auto& p = store[i];
      if (e.at("name").get<std::string>() != p.name ||
          e.at("group").get<std::string>() != p.group ||
          e.at("rows").get<Eigen::Index>() != p.value.rows() ||
          e.at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw DataError("checkpoint: parameter '" + p.name + "' does not match the config");
      }
      for (Eigen::Index k = 0; k < p.value.size(); ++k) {
        p.value.data()[k] = std::bit_cast<double>(read_le<std::uint64_t>(in));
      }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw DataError("checkpoint: trailing bytes after parameter data");
    }
    return Checkpoint{std::move(model), std::move(vocab), std::move(metadata)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: bad config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace xlgen
