#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandkit/matrix.hpp"

namespace sandkit {

// Smallest Euclidean norm a column may have before it is treated as zero.
inline constexpr double kZeroNormFloor = 1e-12;

enum class Method { md, sand_e, sand_w, pca };

std::string_view to_string(Method m);
// Accepts both the underscore form ("sand_e") and the CLI form ("sand-e").
Method parse_method(std::string_view name);

enum class TokenPolicy { last_token };

std::string_view to_string(TokenPolicy p);
TokenPolicy parse_token_policy(std::string_view name);

/// Provenance carried alongside a tensor file in its JSON sidecar.
struct TensorMetadata {
  std::string concept_name;
  std::int64_t layer = 0;
  TokenPolicy token_policy = TokenPolicy::last_token;
  std::optional<Method> method;
  std::string source;
  // Keys not covered above (e.g. "centered", "token_labels") are preserved.
  nlohmann::json extra = nlohmann::json::object();
};

/// d x k activation differences; column i is one positive-minus-negative pair.
struct ActivationDiffSet {
  Matrix diffs;
  TensorMetadata meta;

  std::size_t dim() const noexcept { return diffs.rows(); }
  std::size_t count() const noexcept { return diffs.cols(); }
};

/// n_v x d token embedding table.
struct EmbeddingTable {
  Matrix table;
  bool centered = false;
};

/// Unit-norm direction in activation space plus the extractor that produced it.
class ConceptDirection {
 public:
  // `unit` must have Euclidean norm 1 within 1e-12 (ValidationError otherwise).
  ConceptDirection(Vector unit, Method method, std::string concept_name = {}, std::int64_t layer = 0);

  // Divides `raw` by its norm; DegenerateError when the norm is below kZeroNormFloor.
  static ConceptDirection normalized(std::span<const double> raw, Method method,
                                     std::string concept_name = {}, std::int64_t layer = 0);

  const Vector& vector() const noexcept { return vector_; }
  std::size_t dim() const noexcept { return vector_.size(); }
  Method method() const noexcept { return method_; }
  const std::string& concept_name() const noexcept { return concept_; }
  std::int64_t layer() const noexcept { return layer_; }

 private:
  Vector vector_;
  Method method_;
  std::string concept_;
  std::int64_t layer_;
};

/// One broken invariant in an ActivationDiffSet.
struct Violation {
  std::string rule;  // "empty-set", "dim-too-small", "zero-column"
  std::optional<std::size_t> column;

  std::string to_string() const;  // e.g. "zero-column@3"
  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_diffset(const ActivationDiffSet& s);
// Throws ValidationError listing every violation, if any.
void require_valid(const ActivationDiffSet& s);

// --- NPY v1.0 tensor files -------------------------------------------------

enum class ElementType { f32, f64 };

// Reads a 2-D '<f4' or '<f8' C-order NPY file; f32 payloads are widened.
// Throws FormatError naming the byte offset or entry index of the problem.
Matrix load_matrix(const std::filesystem::path& path);
Matrix parse_npy(std::span<const std::uint8_t> bytes);

// Always writes '<f8'. Throws ValidationError on non-finite values (before any
// byte is written) and Error when the path cannot be written.
void save_matrix(const Matrix& m, const std::filesystem::path& path);
void save_npy(std::size_t rows, std::size_t cols, std::span<const double> values,
              const std::filesystem::path& path, ElementType type = ElementType::f64);
std::vector<std::uint8_t> encode_npy(std::size_t rows, std::size_t cols,
                                     std::span<const double> values,
                                     ElementType type = ElementType::f64);

// --- JSON sidecars ---------------------------------------------------------

// "x/diffs.npy" -> "x/diffs.json"
std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path);

TensorMetadata read_metadata(const std::filesystem::path& json_path);
void write_metadata(const TensorMetadata& meta, const std::filesystem::path& json_path);
nlohmann::json metadata_to_json(const TensorMetadata& meta);
TensorMetadata metadata_from_json(const nlohmann::json& j);

// Loads the tensor plus its sidecar when one exists (defaults otherwise,
// with source set to the tensor path).
ActivationDiffSet load_diffset(const std::filesystem::path& tensor_path);
EmbeddingTable load_embedding_table(const std::filesystem::path& tensor_path);

// Writes `<stem>.npy` as a d x 1 column and `<stem>.json` with metadata and the vector.
void save_direction(const ConceptDirection& dir, const std::filesystem::path& tensor_path,
                    const std::string& source, const nlohmann::json& extra = nlohmann::json::object());
ConceptDirection load_direction(const std::filesystem::path& tensor_path);

}  // namespace sandkit
