#include "capfix/neural/checkpoint.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "capfix/error.h"

namespace capfix::neural {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::string_view kMagic = "CAPFIXCK";

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void put_doubles(std::span<const double> values) {
    out_.append(reinterpret_cast<const char*>(values.data()),
                values.size() * sizeof(double));
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void get_doubles(std::span<double> out, const char* what) {
    // Guard the multiplication before trusting a length from the file.
    if (out.size() > (bytes_.size() - pos_) / sizeof(double)) {
      throw FormatError(std::string("checkpoint truncated in ") + what);
    }
    std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (n > bytes_.size() - pos_) {
      throw FormatError(std::string("checkpoint truncated in ") + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::map<std::string, std::string> parse_header(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("checkpoint header line without '=': " + line);
    }
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

std::size_t header_size(const std::map<std::string, std::string>& header,
                        const std::string& key) {
  auto it = header.find(key);
  if (it == header.end()) throw FormatError("checkpoint header lacks " + key);
  std::size_t value = 0;
  const auto& s = it->second;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("checkpoint header has malformed " + key + ": " + s);
  }
  return value;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  const auto& params = checkpoint.params;
  params.check_shapes();
  if (params.dims.vocab != checkpoint.vocab.size()) {
    throw Error("checkpoint vocabulary size " +
                std::to_string(checkpoint.vocab.size()) +
                " disagrees with model vocabulary " +
                std::to_string(params.dims.vocab));
  }
  std::string header;
  header += "vocab=" + std::to_string(params.dims.vocab) + "\n";
  header += "embed=" + std::to_string(params.dims.embed) + "\n";
  header += "hidden=" + std::to_string(params.dims.hidden) + "\n";
  header += "layers=" + std::to_string(kNumLayers) + "\n";
  header += "classes=" + std::to_string(kNumClasses) + "\n";
  header += "gate_order=" + std::string(kGateOrder) + "\n";
  for (const auto& [key, value] : checkpoint.config.to_map()) {
    header += "train." + key + "=" + value + "\n";
  }

  Writer w;
  w.bytes().append(kMagic);
  w.put(kCheckpointVersion);
  w.put_string(header);
  w.put(static_cast<std::uint64_t>(checkpoint.vocab.size()));
  for (const auto& token : checkpoint.vocab.tokens()) w.put_string(token);
  const auto blocks = parameter_blocks(params);
  w.put(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& block : blocks) {
    w.put_string(block.name);
    w.put(static_cast<std::uint64_t>(block.rows));
    w.put(static_cast<std::uint64_t>(block.cols));
    w.put_doubles(block.values);
  }
  w.put(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + sizeof(std::uint64_t) ||
      bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const auto body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (stored != fnv1a(body)) {
    throw FormatError("checkpoint checksum mismatch (truncated or corrupted)");
  }

  Reader r(body.substr(kMagic.size()));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header = parse_header(r.get_string("header"));
  auto gate = header.find("gate_order");
  if (gate == header.end() || gate->second != kGateOrder) {
    throw FormatError("checkpoint gate order differs from " + std::string(kGateOrder));
  }
  if (header_size(header, "layers") != kNumLayers ||
      header_size(header, "classes") != kNumClasses) {
    throw FormatError("checkpoint layer or class count differs from this build");
  }
  const ModelDims dims{header_size(header, "vocab"), header_size(header, "embed"),
                       header_size(header, "hidden")};

  std::map<std::string, std::string> train_values;
  for (const auto& [key, value] : header) {
    if (key.starts_with("train.")) train_values[key.substr(6)] = value;
  }
  Checkpoint out;
  try {
    out.config = TrainingConfig::from_map(train_values);
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint training config: ") + e.what());
  }

  const auto vocab_size = r.get<std::uint64_t>("vocabulary size");
  if (vocab_size != dims.vocab) {
    throw FormatError("checkpoint vocabulary holds " + std::to_string(vocab_size) +
                      " tokens but header declares " + std::to_string(dims.vocab));
  }
  if (vocab_size > r.remaining()) throw FormatError("checkpoint truncated in vocabulary");
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint64_t i = 0; i < vocab_size; ++i) tokens.push_back(r.get_string("vocabulary"));
  try {
    out.vocab = Vocabulary(std::move(tokens));
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint vocabulary: ") + e.what());
  }

  out.params = ModelParameters::zeros(dims);
  auto blocks = parameter_blocks(out.params);
  const auto count = r.get<std::uint32_t>("block count");
  if (count != blocks.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) +
                      " parameter blocks, expected " + std::to_string(blocks.size()));
  }
  for (auto& block : blocks) {
    const auto name = r.get_string("block name");
    const auto rows = r.get<std::uint64_t>("block shape");
    const auto cols = r.get<std::uint64_t>("block shape");
    if (name != block.name || rows != block.rows || cols != block.cols) {
      throw FormatError("checkpoint block " + name + " (" + std::to_string(rows) + "x" +
                        std::to_string(cols) + ") does not match expected " +
                        block.name + " (" + std::to_string(block.rows) + "x" +
                        std::to_string(block.cols) + ")");
    }
    r.get_doubles(block.values, "parameter data");
  }
  if (r.remaining() != 0) throw FormatError("checkpoint has trailing bytes");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_checkpoint(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace capfix::neural
