#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sandkit/analysis.hpp"
#include "sandkit/directions.hpp"
#include "sandkit/error.hpp"
#include "sandkit/geometry.hpp"
#include "sandkit/intervene.hpp"
#include "sandkit/log.hpp"
#include "sandkit/report_json.hpp"
#include "sandkit/tensor_store.hpp"
#include "sandkit/vmf.hpp"

namespace sandkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LogRedirect {
  explicit LogRedirect(std::ostream& os) { log::redirect(os); }
  ~LogRedirect() { log::reset_to_stderr(); }
  LogRedirect(const LogRedirect&) = delete;
  LogRedirect& operator=(const LogRedirect&) = delete;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

void emit(const json& report, const Common& common, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (common.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(common.out, std::ios::trunc);
  if (!f) throw Error("cannot write report '" + common.out + "'");
  f << text;
}

std::optional<WhiteningContext> load_context(const std::string& path, bool force_centered) {
  if (path.empty()) return std::nullopt;
  EmbeddingTable table = load_embedding_table(path);
  if (force_centered) table.centered = true;
  return center_embeddings(table);
}

TokenAxis parse_axis(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == text.size()) {
    throw UsageError("axis must be 'token,token', got '" + text + "'");
  }
  return {text.substr(0, comma), text.substr(comma + 1)};
}

// --- extract ---------------------------------------------------------------

struct ExtractArgs {
  Common common;
  std::string diffs;
  std::string embeddings;
  std::string method = "sand-e";
  bool center = true;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  const Method method = parse_method(a.method);
  if (method == Method::sand_w && a.embeddings.empty()) {
    throw UsageError("--method sand-w requires --embeddings");
  }
  const ActivationDiffSet s = load_diffset(a.diffs);
  const auto violations = validate_diffset(s);
  if (!violations.empty()) {
    std::string msg = "invalid activation differences in '" + a.diffs + "':";
    for (const auto& v : violations) msg += " " + v.to_string();
    throw ValidationError(msg);
  }
  const auto ctx = method == Method::sand_w ? load_context(a.embeddings, false) : std::nullopt;
  const ConceptDirection dir = extract(method, s, ctx ? &*ctx : nullptr, a.center);

  json extra = {{"seed", a.common.seed}, {"geometry", method == Method::sand_w ? "whitened" : "euclidean"}};
  if (method == Method::pca) extra["center"] = a.center;
  if (ctx) extra["embeddings"] = a.embeddings;

  TensorMetadata meta;
  meta.concept_name = dir.concept_name();
  meta.layer = dir.layer();
  meta.method = dir.method();
  meta.source = a.diffs;
  meta.extra = extra;
  meta.extra["vector"] = dir.vector();
  if (a.common.out.empty()) {
    out << metadata_to_json(meta).dump(2) << "\n";
  } else {
    save_direction(dir, a.common.out, a.diffs, extra);
  }
  return kOk;
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
  Common common;
  std::string manifest;
  std::string embeddings;
  std::vector<std::string> methods;
  bool center = true;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  std::ifstream in(a.manifest);
  if (!in) throw FormatError("cannot open manifest '" + a.manifest + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& e) {
    throw FormatError(a.manifest + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  if (!manifest.is_object() || !manifest.contains("layers") || !manifest["layers"].is_array()) {
    throw FormatError(a.manifest + ": manifest needs a \"layers\" array");
  }
  const fs::path base = fs::path(a.manifest).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  std::string embeddings = a.embeddings;
  if (embeddings.empty() && manifest.contains("embeddings") && manifest["embeddings"].is_string()) {
    embeddings = resolve(manifest["embeddings"].get<std::string>()).string();
  }

  std::vector<Method> methods;
  for (const auto& m : a.methods) methods.push_back(parse_method(m));
  if (methods.empty()) {
    methods = {Method::md, Method::sand_e};
    if (!embeddings.empty()) methods.push_back(Method::sand_w);
    methods.push_back(Method::pca);
  }
  const bool wants_whitened = std::find(methods.begin(), methods.end(), Method::sand_w) != methods.end();
  if (wants_whitened && embeddings.empty()) throw UsageError("method sand-w requires --embeddings");
  const auto ctx = wants_whitened ? load_context(embeddings, false) : std::nullopt;

  std::vector<LayerInput> layers;
  std::size_t index = 0;
  for (const auto& entry : manifest["layers"]) {
    LayerInput l;
    l.layer = static_cast<std::int64_t>(index);
    try {
      if (!entry.is_object() || !entry.contains("diffs")) {
        throw FormatError("manifest entry " + std::to_string(index) + " lacks \"diffs\"");
      }
      if (entry.contains("layer")) l.layer = entry.at("layer").get<std::int64_t>();
      ActivationDiffSet s = load_diffset(resolve(entry.at("diffs").get<std::string>()));
      if (!entry.contains("layer")) l.layer = s.meta.layer;
      s.meta.layer = l.layer;
      l.diffs = std::move(s);
    } catch (const Error& e) {
      l.load_error = e.what();
    } catch (const json::exception& e) {
      l.load_error = std::string("manifest entry: ") + e.what();
    }
    layers.push_back(std::move(l));
    ++index;
  }
  if (layers.empty()) throw ValidationError(a.manifest + ": manifest lists no layers");

  json report = to_json(method_agreement(layers, ctx ? &*ctx : nullptr, methods, a.center));
  report["seed"] = a.common.seed;
  emit(report, a.common, out);
  return kOk;
}

// --- spectrum --------------------------------------------------------------

struct SpectrumArgs {
  Common common;
  std::string embeddings;
  bool centered = false;
  std::size_t bins = 50;
  std::string energy = "sigma2";
};

int cmd_spectrum(const SpectrumArgs& a, std::ostream& out) {
  const auto ctx = load_context(a.embeddings, a.centered);
  const EnergyConvention energy = a.energy == "sigma" ? EnergyConvention::linear : EnergyConvention::squared;
  json report = to_json(spectrum(*ctx, a.bins, energy));
  report["seed"] = a.common.seed;
  emit(report, a.common, out);
  return kOk;
}

// --- intervene -------------------------------------------------------------

struct InterveneArgs {
  Common common;
  std::string direction;
  std::string diffs;
  std::string embeddings;
  std::string method = "sand-e";
  bool center = true;
  std::string unembedding;
  std::string activations;
  double alpha = kDefaultAlpha;
  std::string axis1;
  std::string axis2;
};

int cmd_intervene(const InterveneArgs& a, std::ostream& out) {
  if (a.direction.empty() == a.diffs.empty()) {
    throw UsageError("give exactly one of --direction or --diffs");
  }
  const TokenAxis axis1 = parse_axis(a.axis1);
  const TokenAxis axis2 = parse_axis(a.axis2);

  std::optional<ConceptDirection> dir;
  if (!a.direction.empty()) {
    dir = load_direction(a.direction);
  } else {
    const Method method = parse_method(a.method);
    if (method == Method::sand_w && a.embeddings.empty()) {
      throw UsageError("--method sand-w requires --embeddings");
    }
    const ActivationDiffSet s = load_diffset(a.diffs);
    require_valid(s);
    const auto ctx = method == Method::sand_w ? load_context(a.embeddings, false) : std::nullopt;
    dir = extract(method, s, ctx ? &*ctx : nullptr, a.center);
  }

  const Matrix table = load_matrix(a.unembedding);
  const auto side = sidecar_path(a.unembedding);
  if (!fs::exists(side)) throw FormatError("unembedding table needs a sidecar with \"token_labels\"");
  const TensorMetadata meta = read_metadata(side);
  if (!meta.extra.contains("token_labels")) {
    throw FormatError(side.string() + ": missing \"token_labels\"");
  }
  const UnembeddingTable gamma(table, meta.extra.at("token_labels").get<std::vector<std::string>>());

  const Matrix activations = a.activations.empty() ? Matrix::zeros(dir->dim(), 1) : load_matrix(a.activations);
  json report = to_json(arrow_map(activations, gamma, *dir, a.alpha, axis1, axis2));
  report["method"] = std::string(to_string(dir->method()));
  report["seed"] = a.common.seed;
  emit(report, a.common, out);
  return kOk;
}

// --- flops -----------------------------------------------------------------

struct FlopsArgs {
  Common common;
  std::uint64_t d = 0;
  std::uint64_t k = 0;
  std::uint64_t nv = 0;
};

int cmd_flops(const FlopsArgs& a, std::ostream& out) {
  json report = to_json(count_flops(a.d, a.k, a.nv));
  report["seed"] = a.common.seed;
  emit(report, a.common, out);
  return kOk;
}

// --- vmf-sim ---------------------------------------------------------------

struct VmfSimArgs {
  Common common;
  std::size_t dim = 16;
  double kappa = 50.0;
  std::size_t n = 1000;
  bool center = false;
};

// Unit vMF draws l_i scaled by i.i.d. log-normal factors; the identity
// geometry (C = I) makes whitening coincide with the Euclidean case.
int cmd_vmf_sim(const VmfSimArgs& a, std::ostream& out) {
  if (a.dim < 2) throw UsageError("--dim must be >= 2");
  if (a.n < 1) throw UsageError("--n must be >= 1");
  std::mt19937_64 master(a.common.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector mu(a.dim);
  for (double& x : mu) x = normal(master);
  const double norm = euclidean_norm(mu);
  for (double& x : mu) x /= norm;

  const vmf::VmfParams params(mu, a.kappa);
  const Matrix units = vmf::sample(params, a.n, master());
  std::mt19937_64 scale_rng(master());
  std::vector<double> data(units.size());
  for (std::size_t j = 0; j < a.n; ++j) {
    const double s = std::exp(normal(scale_rng));
    for (std::size_t i = 0; i < a.dim; ++i) data[i * a.n + j] = s * units(i, j);
  }
  ActivationDiffSet diffs{Matrix(a.dim, a.n, std::move(data)), {}};
  diffs.meta.concept_name = "vmf-sim";
  const WhiteningContext identity = WhiteningContext::from_matrix(Matrix::identity(a.dim));

  json cos = json::object();
  json directions = json::object();
  json errors = json::object();
  for (Method m : {Method::md, Method::sand_e, Method::sand_w, Method::pca}) {
    const std::string name(to_string(m));
    try {
      const ConceptDirection dir = extract(m, diffs, &identity, a.center);
      cos[name] = cosine(dir.vector(), mu);
      directions[name] = dir.vector();
    } catch (const Error& e) {
      cos[name] = nullptr;
      errors[name] = e.what();
    }
  }

  json report = {{"dim", a.dim}, {"kappa", a.kappa}, {"n", a.n}, {"seed", a.common.seed},
                 {"center", a.center}, {"geometry", "identity"}, {"mu", mu},
                 {"cos", cos}, {"directions", directions}, {"errors", errors}};
  report["resultant_length"] = vmf::resultant_length(units);
  try {
    report["kappa_hat"] = a.n >= 2 ? json(vmf::estimate_kappa(units)) : json();
  } catch (const Error&) {
    report["kappa_hat"] = nullptr;
  }
  emit(report, a.common, out);
  return kOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed recorded in the report (and used by vmf-sim)")->capture_default_str();
  sub->add_option("--out", c.out, "Output path (default: stdout)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  LogRedirect redirect(err);

  CLI::App app{"Concept directions from activation differences", "sandkit"};
  app.require_subcommand(1);
  app.require_subcommand(1);

  std::function<int(std::ostream&)> action;

  ExtractArgs ex;
  auto* extract_cmd = app.add_subcommand("extract", "Extract a concept direction from activation differences");
  extract_cmd->add_option("--diffs", ex.diffs, "d x k activation-difference tensor (.npy)")->required();
  extract_cmd->add_option("--embeddings", ex.embeddings, "n_v x d embedding table (.npy)");
  extract_cmd->add_option("--method", ex.method)->check(CLI::IsMember({"md", "sand-e", "sand-w", "pca"}))->capture_default_str();
  extract_cmd->add_option("--center", ex.center, "Center columns before PCA")->capture_default_str();
  add_common(extract_cmd, ex.common);
  extract_cmd->callback([&] { action = [&](std::ostream& o) { return cmd_extract(ex, o); }; });

  CompareArgs cmp;
  auto* compare_cmd = app.add_subcommand("compare", "Cross-method cosine agreement per layer");
  compare_cmd->add_option("--manifest", cmp.manifest, "JSON manifest listing per-layer diff files")->required();
  compare_cmd->add_option("--embeddings", cmp.embeddings, "n_v x d embedding table (.npy)");
  compare_cmd->add_option("--method", cmp.methods, "Methods to compare (repeat or comma-separate)")
      ->delimiter(',')
      ->check(CLI::IsMember({"md", "sand-e", "sand-w", "pca"}));
  compare_cmd->add_option("--center", cmp.center, "Center columns before PCA")->capture_default_str();
  add_common(compare_cmd, cmp.common);
  compare_cmd->callback([&] { action = [&](std::ostream& o) { return cmd_compare(cmp, o); }; });

  SpectrumArgs sp;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Singular value diagnostics of the centered embeddings");
  spectrum_cmd->add_option("--embeddings", sp.embeddings, "n_v x d embedding table (.npy)")->required();
  spectrum_cmd->add_flag("--centered", sp.centered, "Treat the table as already centered (use it as C)");
  spectrum_cmd->add_option("--bins", sp.bins)->check(CLI::PositiveNumber)->capture_default_str();
  spectrum_cmd->add_option("--energy", sp.energy, "Cumulative energy of sigma^2 or sigma")
      ->check(CLI::IsMember({"sigma2", "sigma"}))
      ->capture_default_str();
  add_common(spectrum_cmd, sp.common);
  spectrum_cmd->callback([&] { action = [&](std::ostream& o) { return cmd_spectrum(sp, o); }; });

  InterveneArgs iv;
  auto* intervene_cmd = app.add_subcommand("intervene", "Log-odds arrows of an activation-addition intervention");
  intervene_cmd->add_option("--direction", iv.direction, "Direction tensor written by extract --out");
  intervene_cmd->add_option("--diffs", iv.diffs, "Extract the direction from these differences instead");
  intervene_cmd->add_option("--embeddings", iv.embeddings, "Embedding table for --method sand-w");
  intervene_cmd->add_option("--method", iv.method)->check(CLI::IsMember({"md", "sand-e", "sand-w", "pca"}))->capture_default_str();
  intervene_cmd->add_option("--center", iv.center)->capture_default_str();
  intervene_cmd->add_option("--unembedding", iv.unembedding, "n_v x d unembedding table; sidecar lists token_labels")->required();
  intervene_cmd->add_option("--activations", iv.activations, "d x m base activations (default: one zero vector)");
  intervene_cmd->add_option("--alpha", iv.alpha, "Intervention strength")->capture_default_str();
  intervene_cmd->add_option("--axis1", iv.axis1, "Token pair y1,y2 for dx")->required();
  intervene_cmd->add_option("--axis2", iv.axis2, "Token pair y1,y2 for dy")->required();
  add_common(intervene_cmd, iv.common);
  intervene_cmd->callback([&] { action = [&](std::ostream& o) { return cmd_intervene(iv, o); }; });

  FlopsArgs fl;
  auto* flops_cmd = app.add_subcommand("flops", "Exact flop count of the SAND procedure");
  flops_cmd->add_option("--d", fl.d)->required()->check(CLI::PositiveNumber);
  flops_cmd->add_option("--k", fl.k)->required()->check(CLI::PositiveNumber);
  flops_cmd->add_option("--nv", fl.nv)->required()->check(CLI::PositiveNumber);
  add_common(flops_cmd, fl.common);
  flops_cmd->callback([&] { action = [&](std::ostream& o) { return cmd_flops(fl, o); }; });

  VmfSimArgs vs;
  auto* vmf_cmd = app.add_subcommand("vmf-sim", "Recover a vMF mean direction with every extractor");
  vmf_cmd->add_option("--dim", vs.dim)->capture_default_str();
  vmf_cmd->add_option("--kappa", vs.kappa)->check(CLI::NonNegativeNumber)->capture_default_str();
  vmf_cmd->add_option("--n", vs.n)->capture_default_str();
  vmf_cmd->add_option("--center", vs.center, "Center columns before PCA")->capture_default_str();
  add_common(vmf_cmd, vs.common);
  vmf_cmd->callback([&] { action = [&](std::ostream& o) { return cmd_vmf_sim(vs, o); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sandkit: " << e.what() << "\n";
    return kUsage;
  }

  try {
    return action(out);
  } catch (const UsageError& e) {
    err << "sandkit: usage: " << e.what() << "\n";
    return kUsage;
  } catch (const DegenerateError& e) {
    err << "sandkit: degenerate: " << e.what() << "\n";
    return kDegenerate;
  } catch (const FormatError& e) {
    err << "sandkit: invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const ValidationError& e) {
    err << "sandkit: invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const DimensionError& e) {
    err << "sandkit: invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const Error& e) {
    err << "sandkit: error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const nlohmann::json::exception& e) {
    err << "sandkit: invalid input: " << e.what() << "\n";
    return kInvalidInput;
  }
}

}  // namespace sandkit::cli
