// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "sandkit/analysis.hpp"
#include "sandkit/directions.hpp"
#include "sandkit/geometry.hpp"
#include "sandkit/intervene.hpp"
#include "sandkit/vmf.hpp"

#ifdef SANDKIT_HAVE_CLI
#include <fstream>
#include "cli.hpp"
#endif

namespace {

using namespace sandkit;
using testing::Rng;

struct Verdict {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Verdict()> body;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ActivationDiffSet diffs_of(const Matrix& m) { return {m, {}}; }

Verdict algorithm_equivalence() {
  Rng rng(20240501);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = 1 + rng() % 128;
    const std::size_t k = 1 + rng() % 64;
    const std::size_t nv = 1 + rng() % 512;
    const Matrix l = testing::random_matrix(d, k, rng);
    const Matrix c = testing::random_matrix(nv, d, rng);
    const auto ref = testing::naive_sand(l, c);
    const SandSums got = sand_algorithm(l, c);
    worst = std::max({worst, testing::rel_error(got.s1, ref.s1), testing::rel_error(got.s2, ref.s2)});
  }
  return {worst <= 1e-12, "1000 instances, max rel err " + fmt("%.2e", worst) + " (tol 1e-12)"};
}

Verdict whitening_identity() {
  Rng rng(7);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + rng() % 32;
    const std::size_t nv = 2 + rng() % 200;
    EmbeddingTable e;
    e.table = testing::random_matrix(nv, d, rng, 0.5 + (rng() % 100) / 10.0);
    const WhiteningContext ctx = center_embeddings(e);
    Eigen::MatrixXd cov = ctx.centered().to_eigen().transpose() * ctx.centered().to_eigen();
    cov /= static_cast<double>(nv);
    const Eigen::MatrixXd root = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).operatorSqrt();
    for (int r = 0; r < 5; ++r) {
      const Vector v = testing::random_vector(d, rng);
      const double ref = (root * as_eigen(v)).norm();
      if (ref < 1e-6) continue;
      worst = std::max(worst, std::fabs(whitened_norm(ctx, v) - ref) / ref);
    }
  }
  return {worst <= 1e-8, "200 contexts, max rel err " + fmt("%.2e", worst) + " (tol 1e-8)"};
}

Verdict vmf_recovery() {
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Vector mu = testing::random_unit(16, rng);
    const Matrix units = vmf::sample(vmf::VmfParams(mu, 50.0), 10000, seed + 100);
    worst = std::min(worst, testing::cos_of(vmf::mle_mean(units), mu));
    std::lognormal_distribution<double> scale(0.0, 1.0);
    Vector factor(units.cols());
    for (double& f : factor) f = scale(rng);
    std::vector<double> data(units.size());
    for (std::size_t i = 0; i < units.rows(); ++i) {
      for (std::size_t j = 0; j < units.cols(); ++j) data[i * units.cols() + j] = factor[j] * units(i, j);
    }
    const Matrix scaled(units.rows(), units.cols(), std::move(data));
    worst = std::min(worst, testing::cos_of(sand_euclidean(diffs_of(scaled)).vector(), mu));
  }
  return {worst >= 0.99, "20 seeds, min cos " + fmt("%.6f", worst) + " (need >= 0.99)"};
}

Verdict flop_model() {
  const FlopReport small = count_flops(3, 2, 4);
  const FlopReport big = count_flops(1000, 100, 10000);
  const double dev = std::fabs(big.ratio - 1.0);
  return {small.total == 92 && dev <= 0.01,
          "total(3,2,4) = " + std::to_string(small.total) + ", |ratio - 1| = " + fmt("%.2e", dev) + " (tol 0.01)"};
}

Verdict scale_invariance() {
  Rng rng(11);
  bool exact = true;
  double worst = 0.0;
  std::lognormal_distribution<double> scale(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + rng() % 40;
    const std::size_t k = 1 + rng() % 30;
    const Matrix l = testing::random_matrix(d, k, rng);
    const auto ctx = WhiteningContext::from_matrix(testing::random_matrix(d + 10, d, rng));
    Matrix pow2 = l, arbitrary = l;
    for (std::size_t j = 0; j < k; ++j) {
      pow2 = testing::scale_column(pow2, j, std::ldexp(1.0, static_cast<int>(rng() % 41) - 20));
      arbitrary = testing::scale_column(arbitrary, j, scale(rng));
    }
    const Vector e = sand_euclidean(diffs_of(l)).vector();
    const Vector w = sand_whitened(diffs_of(l), ctx).vector();
    exact = exact && sand_euclidean(diffs_of(pow2)).vector() == e && sand_whitened(diffs_of(pow2), ctx).vector() == w;
    worst = std::max({worst, testing::rel_error(sand_euclidean(diffs_of(arbitrary)).vector(), e),
                      testing::rel_error(sand_whitened(diffs_of(arbitrary), ctx).vector(), w)});
  }
  const auto base = diffs_of(Matrix::from_columns({{1, 0}, {0, 1}}));
  const auto skew = diffs_of(Matrix::from_columns({{100, 0}, {0, 1}}));
  const double md_cos = testing::cos_of(mean_difference(base).vector(), mean_difference(skew).vector());
  return {exact && worst <= 1e-14 && md_cos < 0.99,
          std::string("power-of-two scales ") + (exact ? "bit-identical" : "NOT bit-identical") +
              ", arbitrary scales max rel err " + fmt("%.1e", worst) + " (tol 1e-14), md counterexample cos " +
              fmt("%.4f", md_cos) + " (need < 0.99)"};
}

Verdict anisotropy_concordance() {
  const std::size_t d = 64;
  int close = 0;
  double worst_iso = 1.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(5000 + seed);
    const Vector mu = testing::random_unit(d, rng);
    const auto s = diffs_of(testing::cone_columns(mu, 48, {}, rng));
    if (cosine(mean_difference(s).vector(), sand_euclidean(s).vector()) >= 0.95) ++close;
    const auto iso = WhiteningContext::from_matrix(testing::isotropic_c(128, d, 1.5, rng));
    worst_iso = std::min(worst_iso, cosine(sand_euclidean(s).vector(), sand_whitened(s, iso).vector()));
  }
  return {close >= 95 && worst_iso >= 0.999,
          "cos(md, sand_e) >= 0.95 in " + std::to_string(close) + "/100 seeds (need 95), isotropic min cos " +
              fmt("%.6f", worst_iso) + " (need >= 0.999)"};
}

Verdict spectrum_correctness() {
  Rng rng(13);
  double worst_sigma = 0.0;
  double worst_end = 0.0;
  bool monotone = true;
  std::uniform_real_distribution<double> unif(0.01, 20.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng() % 24;
    const std::size_t nv = d + rng() % 40;
    Vector sigma(d);
    for (double& s : sigma) s = unif(rng);
    std::sort(sigma.rbegin(), sigma.rend());
    const Eigen::MatrixXd u = testing::random_orthonormal(nv, d, rng);
    const Eigen::MatrixXd v = testing::random_orthonormal(d, d, rng);
    const Matrix c = Matrix::from_eigen(Eigen::MatrixXd(u * as_eigen(sigma).asDiagonal() * v.transpose()));
    const SpectrumReport r = spectrum(WhiteningContext::from_matrix(c), 20);
    for (std::size_t i = 0; i < d; ++i) worst_sigma = std::max(worst_sigma, std::fabs(r.singular_values[i] - sigma[i]));
    for (std::size_t i = 1; i < d; ++i) monotone = monotone && r.cumulative_energy[i] >= r.cumulative_energy[i - 1];
    worst_end = std::max(worst_end, std::fabs(r.cumulative_energy.back() - 1.0));
  }
  return {worst_sigma <= 1e-10 && monotone && worst_end <= 1e-12,
          "100 contexts, max |sigma err| " + fmt("%.1e", worst_sigma) + " (tol 1e-10), energy " +
              (monotone ? "monotone" : "NOT monotone") + ", max |end - 1| " + fmt("%.1e", worst_end) + " (tol 1e-12)"};
}

Verdict intervention_algebra() {
  Rng rng(17);
  bool exact = true;
  double worst = 0.0;
  std::uniform_real_distribution<double> unif(-50.0, 50.0);
  std::vector<std::string> labels = {"king", "queen", "King", "Queen", "x", "y"};
  for (int t = 0; t < 100; ++t) {
    const UnembeddingTable g(testing::random_matrix(6, 10, rng), labels);
    const auto u = ConceptDirection::normalized(testing::random_vector(10, rng), Method::sand_e, "c", 0);
    const std::string& y1 = labels[rng() % 6];
    const std::string& y2 = labels[rng() % 6];
    const double a = unif(rng), b = unif(rng);
    const double at_a = log_odds_shift(g, u, a, y1, y2);
    exact = exact && log_odds_shift(g, u, a + a, y1, y2) == at_a + at_a;
    exact = exact && at_a == -log_odds_shift(g, u, a, y2, y1);
    const double lhs = log_odds_shift(g, u, a + b, y1, y2);
    worst = std::max(worst, std::fabs(lhs - at_a - log_odds_shift(g, u, b, y1, y2)) / std::max(1.0, std::fabs(lhs)));
    const ArrowMap m = arrow_map(testing::random_matrix(10, 4, rng, 10.0), g, u, a, {y1, y2}, {"x", "y"});
    for (const auto& rec : m.records) exact = exact && rec.dx == at_a;
  }
  // king, queen, King, Queen: gender on e1, case on e2.
  const UnembeddingTable toy(Matrix(4, 3, {0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1}), {"king", "queen", "King", "Queen"});
  const auto female = sand_euclidean(diffs_of(Matrix::from_columns({{1, 0.02, 0}, {2, -0.05, 0}, {0.5, 0.01, 0}})));
  const ArrowMap fig = arrow_map(Matrix::zeros(3, 1), toy, female, kDefaultAlpha, {"queen", "king"}, {"King", "king"});
  const double dx = fig.records[0].dx;
  return {exact && worst <= 1e-13 && dx > 0.0,
          std::string("doubling/antisymmetry/activation-independence ") + (exact ? "bit-exact" : "NOT exact") +
              ", general linearity max rel err " + fmt("%.1e", worst) + " (tol 1e-13), toy dx at alpha 10 = " +
              fmt("%.4f", dx) + " (need > 0)"};
}

#ifdef SANDKIT_HAVE_CLI
Verdict cli_determinism() {
  const auto dir = testing::fresh_temp_dir("acceptance");
  Rng rng(19);
  const auto put = [&](const std::string& name, const Matrix& m, const nlohmann::json& extra) {
    const auto p = dir / name;
    save_matrix(m, p);
    if (!extra.empty()) {
      TensorMetadata meta;
      meta.extra = extra;
      write_metadata(meta, sidecar_path(p));
    }
    return p.string();
  };
  const auto diffs = put("d.npy", testing::random_matrix(8, 12, rng), nlohmann::json::object());
  const auto emb = put("e.npy", testing::random_matrix(30, 8, rng), nlohmann::json::object());
  const auto gamma = put("g.npy", testing::random_matrix(3, 8, rng), {{"token_labels", {"a", "b", "c"}}});
  std::ofstream(dir / "m.json") << R"({"layers":[{"layer":0,"diffs":"d.npy"},{"layer":1,"diffs":"d.npy"}],"embeddings":"e.npy"})";
  const std::vector<std::vector<std::string>> cmds = {
      {"extract", "--diffs", diffs, "--method", "sand-w", "--embeddings", emb, "--seed", "3"},
      {"compare", "--manifest", (dir / "m.json").string(), "--seed", "3"},
      {"spectrum", "--embeddings", emb, "--seed", "3"},
      {"intervene", "--diffs", diffs, "--unembedding", gamma, "--axis1", "a,b", "--axis2", "b,c", "--seed", "3"},
      {"flops", "--d", "8", "--k", "12", "--nv", "30", "--seed", "3"},
      {"vmf-sim", "--n", "2000", "--seed", "3"},
  };
  Verdict v;
  for (const auto& c : cmds) {
    std::ostringstream o1, o2, e1, e2;
    const int r1 = cli::run(c, o1, e1);
    const int r2 = cli::run(c, o2, e2);
    if (r1 != 0 || r2 != 0 || o1.str() != o2.str() || o1.str().empty()) {
      v.ok = false;
      v.detail += c[0] + " differs or failed; ";
    }
  }
  std::filesystem::remove_all(dir);
  if (v.ok) v.detail = std::to_string(cmds.size()) + " subcommands byte-identical across reruns";
  return v;
}
#else
Verdict cli_determinism() { return {false, "command-line tool not built"}; }
#endif

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"algorithm equivalence", 60, algorithm_equivalence},
      {"whitening identity", 30, whitening_identity},
      {"vmf mean recovery", 30, vmf_recovery},
      {"flop model", 0, flop_model},
      {"scale-invariance separation", 0, scale_invariance},
      {"anisotropy concordance", 0, anisotropy_concordance},
      {"spectrum correctness", 0, spectrum_correctness},
      {"intervention algebra", 0, intervention_algebra},
      {"cli determinism", 0, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      v.ok = false;
      v.detail += "; exceeded " + fmt("%.0f s budget", c.budget_s);
    }
    std::printf("%s  %-28s %s [%.2f s]\n", v.ok ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
    failures += v.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
