#include "sandkit/tensor_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include "sandkit/error.hpp"

namespace sandkit {
namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kPreludeV1 = 10;  // magic + version + u16 header length
constexpr std::size_t kAlignment = 64;

template <typename T>
T read_le(const std::uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<std::uint8_t*>(&value);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  return value;
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  for (std::uint8_t byte : b) out.push_back(byte);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

struct Header {
  ElementType type;
  std::size_t rows;
  std::size_t cols;
};

Header parse_header(const std::string& text, std::size_t offset) {
  auto fail = [&](const std::string& what) -> FormatError {
    return FormatError("malformed NPY header at byte " + std::to_string(offset) + ": " + what);
  };
  if (text.empty() || text.front() != '{') throw fail("expected '{'");

  static const std::regex descr_re(R"(['"]descr['"]\s*:\s*['"]([^'"]*)['"])");
  static const std::regex order_re(R"(['"]fortran_order['"]\s*:\s*(True|False))");
  static const std::regex shape_re(R"(['"]shape['"]\s*:\s*\(([^)]*)\))");

  std::smatch m;
  if (!std::regex_search(text, m, descr_re)) throw fail("missing 'descr'");
  const std::string descr = m[1];
  Header h{};
  if (descr == "<f8") {
    h.type = ElementType::f64;
  } else if (descr == "<f4") {
    h.type = ElementType::f32;
  } else {
    throw FormatError("unsupported element type '" + descr + "' in NPY header at byte " +
                      std::to_string(offset) + " (expected '<f4' or '<f8')");
  }

  if (!std::regex_search(text, m, order_re)) throw fail("missing 'fortran_order'");
  if (m[1] == "True") {
    throw FormatError("unsupported layout in NPY header at byte " + std::to_string(offset) +
                      ": fortran_order must be False");
  }

  if (!std::regex_search(text, m, shape_re)) throw fail("missing 'shape'");
  std::vector<std::size_t> dims;
  std::stringstream ss(m[1].str());
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item.find_first_not_of("0123456789") != std::string::npos) {
      throw fail("shape entry '" + item + "' is not a non-negative integer");
    }
    dims.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  if (dims.size() != 2) {
    throw fail("shape must have exactly 2 dimensions, found " + std::to_string(dims.size()));
  }
  h.rows = dims[0];
  h.cols = dims[1];
  return h;
}

std::string header_text(std::size_t rows, std::size_t cols, ElementType type) {
  std::string dict = "{'descr': '";
  dict += (type == ElementType::f64) ? "<f8" : "<f4";
  dict += "', 'fortran_order': False, 'shape': (" + std::to_string(rows) + ", " +
          std::to_string(cols) + "), }";
  const std::size_t unpadded = kPreludeV1 + dict.size() + 1;  // trailing newline
  const std::size_t pad = (kAlignment - unpadded % kAlignment) % kAlignment;
  dict.append(pad, ' ');
  dict.push_back('\n');
  return dict;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::md: return "md";
    case Method::sand_e: return "sand_e";
    case Method::sand_w: return "sand_w";
    case Method::pca: return "pca";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "md") return Method::md;
  if (name == "sand_e" || name == "sand-e") return Method::sand_e;
  if (name == "sand_w" || name == "sand-w") return Method::sand_w;
  if (name == "pca") return Method::pca;
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(TokenPolicy) { return "last_token"; }

TokenPolicy parse_token_policy(std::string_view name) {
  if (name == "last_token") return TokenPolicy::last_token;
  throw ValidationError("unknown token policy '" + std::string(name) + "'");
}

// --- ConceptDirection ------------------------------------------------------

ConceptDirection::ConceptDirection(Vector unit, Method method, std::string concept_name,
                                   std::int64_t layer)
    : vector_(std::move(unit)), method_(method), concept_(std::move(concept_name)), layer_(layer) {
  for (double x : vector_) {
    if (!std::isfinite(x)) throw ValidationError("concept direction has a non-finite entry");
  }
  const double n = euclidean_norm(vector_);
  if (std::fabs(n - 1.0) > 1e-12) {
    throw ValidationError("concept direction must be unit norm, got norm " + std::to_string(n));
  }
}

ConceptDirection ConceptDirection::normalized(std::span<const double> raw, Method method,
                                              std::string concept_name, std::int64_t layer) {
  const double n = euclidean_norm(raw);
  if (!(n >= kZeroNormFloor)) {
    throw DegenerateError("cannot normalize direction: norm " + std::to_string(n) +
                          " is below 1e-12");
  }
  Vector unit(raw.begin(), raw.end());
  for (double& x : unit) x /= n;
  return ConceptDirection(std::move(unit), method, std::move(concept_name), layer);
}

// --- validation ------------------------------------------------------------

std::string Violation::to_string() const {
  return column ? rule + "@" + std::to_string(*column) : rule;
}

std::vector<Violation> validate_diffset(const ActivationDiffSet& s) {
  std::vector<Violation> out;
  if (s.count() == 0) out.push_back({"empty-set", std::nullopt});
  if (s.dim() < 2) out.push_back({"dim-too-small", std::nullopt});
  const auto& m = s.diffs;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) sq += m(i, j) * m(i, j);
    if (std::sqrt(sq) < kZeroNormFloor) out.push_back({"zero-column", j});
  }
  return out;
}

void require_valid(const ActivationDiffSet& s) {
  const auto violations = validate_diffset(s);
  if (violations.empty()) return;
  std::string msg = "invalid activation differences:";
  for (const auto& v : violations) msg += " " + v.to_string();
  throw ValidationError(msg);
}

// --- NPY -------------------------------------------------------------------

Matrix parse_npy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreludeV1) {
    throw FormatError("truncated NPY file: " + std::to_string(bytes.size()) +
                      " bytes, need at least 10");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("bad NPY magic at byte 0");
  }
  const std::uint8_t major = bytes[6];
  std::size_t header_len = 0;
  std::size_t header_start = 0;
  if (major == 1) {
    header_len = read_le<std::uint16_t>(bytes.data() + 8);
    header_start = kPreludeV1;
  } else if (major == 2) {
    if (bytes.size() < 12) throw FormatError("truncated NPY v2 prelude at byte 8");
    header_len = read_le<std::uint32_t>(bytes.data() + 8);
    header_start = 12;
  } else {
    throw FormatError("unsupported NPY version " + std::to_string(major) + "." +
                      std::to_string(bytes[7]) + " at byte 6");
  }
  if (header_start + header_len > bytes.size()) {
    throw FormatError("NPY header at byte " + std::to_string(header_start) + " declares " +
                      std::to_string(header_len) + " bytes but file has " +
                      std::to_string(bytes.size() - header_start));
  }
  const std::string text(reinterpret_cast<const char*>(bytes.data() + header_start), header_len);
  const Header h = parse_header(text, header_start);

  const std::size_t elem = (h.type == ElementType::f64) ? 8 : 4;
  const std::size_t payload_start = header_start + header_len;
  const std::size_t payload = bytes.size() - payload_start;
  const std::size_t expected_values = h.rows * h.cols;
  if (payload != expected_values * elem) {
    throw FormatError("shape mismatch: payload at byte " + std::to_string(payload_start) +
                      " holds " + std::to_string(payload) + " bytes (" +
                      std::to_string(payload / elem) + " values), header shape (" +
                      std::to_string(h.rows) + ", " + std::to_string(h.cols) + ") requires " +
                      std::to_string(expected_values));
  }

  std::vector<double> values(expected_values);
  const std::uint8_t* p = bytes.data() + payload_start;
  for (std::size_t i = 0; i < expected_values; ++i) {
    const double v = (h.type == ElementType::f64)
                         ? read_le<double>(p + i * 8)
                         : static_cast<double>(read_le<float>(p + i * 4));
    if (!std::isfinite(v)) {
      throw FormatError("non-finite entry at index " + std::to_string(i) + " (byte " +
                        std::to_string(payload_start + i * elem) + ")");
    }
    values[i] = v;
  }
  return Matrix(h.rows, h.cols, std::move(values));
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tensor file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_npy(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_npy(std::size_t rows, std::size_t cols,
                                     std::span<const double> values, ElementType type) {
  if (values.size() != rows * cols) {
    throw ValidationError("cannot encode: " + std::to_string(values.size()) +
                          " values for shape (" + std::to_string(rows) + ", " +
                          std::to_string(cols) + ")");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool ok = (type == ElementType::f64) ? std::isfinite(values[i])
                                                : std::isfinite(static_cast<float>(values[i]));
    if (!ok) throw ValidationError("refusing to write non-finite entry at index " + std::to_string(i));
  }
  const std::string header = header_text(rows, cols, type);
  std::vector<std::uint8_t> out;
  out.reserve(kPreludeV1 + header.size() + values.size() * 8);
  for (std::uint8_t byte : kMagic) out.push_back(byte);
  out.push_back(0x01);
  out.push_back(0x00);
  append_le<std::uint16_t>(out, static_cast<std::uint16_t>(header.size()));
  for (char ch : header) out.push_back(static_cast<std::uint8_t>(ch));
  for (double v : values) {
    if (type == ElementType::f64) {
      append_le<double>(out, v);
    } else {
      append_le<float>(out, static_cast<float>(v));
    }
  }
  return out;
}

void save_npy(std::size_t rows, std::size_t cols, std::span<const double> values,
              const std::filesystem::path& path, ElementType type) {
  const auto bytes = encode_npy(rows, cols, values, type);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write tensor file '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to tensor file '" + path.string() + "'");
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  save_npy(m.rows(), m.cols(), m.data(), path, ElementType::f64);
}

// --- sidecars --------------------------------------------------------------

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path) {
  auto p = tensor_path;
  p.replace_extension(".json");
  return p;
}

nlohmann::json metadata_to_json(const TensorMetadata& meta) {
  nlohmann::json j = meta.extra.is_object() ? meta.extra : nlohmann::json::object();
  j["concept"] = meta.concept_name;
  j["layer"] = meta.layer;
  j["token_policy"] = std::string(to_string(meta.token_policy));
  j["method"] = meta.method ? nlohmann::json(std::string(to_string(*meta.method))) : nlohmann::json();
  j["source"] = meta.source;
  return j;
}

TensorMetadata metadata_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("sidecar must be a JSON object");
  TensorMetadata meta;
  try {
    if (j.contains("concept")) meta.concept_name = j.at("concept").get<std::string>();
    if (j.contains("layer")) meta.layer = j.at("layer").get<std::int64_t>();
    if (j.contains("token_policy")) {
      meta.token_policy = parse_token_policy(j.at("token_policy").get<std::string>());
    }
    if (j.contains("method") && !j.at("method").is_null()) {
      meta.method = parse_method(j.at("method").get<std::string>());
    }
    if (j.contains("source")) meta.source = j.at("source").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sidecar field has wrong type: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("sidecar: ") + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "concept" && key != "layer" && key != "token_policy" && key != "method" &&
        key != "source") {
      meta.extra[key] = value;
    }
  }
  return meta;
}

TensorMetadata read_metadata(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw FormatError("cannot open sidecar '" + json_path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(json_path.string() + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  return metadata_from_json(j);
}

void write_metadata(const TensorMetadata& meta, const std::filesystem::path& json_path) {
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw Error("cannot write sidecar '" + json_path.string() + "'");
  out << metadata_to_json(meta).dump(2) << '\n';
}

ActivationDiffSet load_diffset(const std::filesystem::path& tensor_path) {
  ActivationDiffSet s;
  s.diffs = load_matrix(tensor_path);
  const auto side = sidecar_path(tensor_path);
  if (std::filesystem::exists(side)) {
    s.meta = read_metadata(side);
  } else {
    s.meta.source = tensor_path.string();
  }
  return s;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& tensor_path) {
  EmbeddingTable e;
  e.table = load_matrix(tensor_path);
  const auto side = sidecar_path(tensor_path);
  if (std::filesystem::exists(side)) {
    const auto meta = read_metadata(side);
    if (meta.extra.contains("centered")) e.centered = meta.extra.at("centered").get<bool>();
  }
  return e;
}

void save_direction(const ConceptDirection& dir, const std::filesystem::path& tensor_path,
                    const std::string& source, const nlohmann::json& extra) {
  save_matrix(Matrix(dir.dim(), 1, dir.vector()), tensor_path);
  TensorMetadata meta;
  meta.concept_name = dir.concept_name();
  meta.layer = dir.layer();
  meta.method = dir.method();
  meta.source = source;
  meta.extra = extra.is_object() ? extra : nlohmann::json::object();
  meta.extra["vector"] = dir.vector();
  write_metadata(meta, sidecar_path(tensor_path));
}

ConceptDirection load_direction(const std::filesystem::path& tensor_path) {
  const Matrix m = load_matrix(tensor_path);
  if (m.cols() != 1) {
    throw FormatError(tensor_path.string() + ": direction tensor must be d x 1, got (" +
                      std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + ")");
  }
  TensorMetadata meta;
  const auto side = sidecar_path(tensor_path);
  if (std::filesystem::exists(side)) meta = read_metadata(side);
  if (!meta.method) throw FormatError(side.string() + ": direction sidecar lacks 'method'");
  Vector v(m.data().begin(), m.data().end());
  return ConceptDirection(std::move(v), *meta.method, meta.concept_name, meta.layer);
}

}  // namespace sandkit
