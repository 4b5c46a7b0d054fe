#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpkz/colehopf.hpp"
#include "dpkz/noise.hpp"
#include "dpkz/polymer.hpp"
#include "dpkz/scaling.hpp"
#include "dpkz/stats.hpp"

namespace dpkz {

// everything an experiment needs, as plain data so it can round-trip
// through JSON manifests
struct ExperimentConfig {
  int d = 3;

  std::string law_kind = "standard-gaussian";  // | affine-gaussian | lipschitz-map
  double law_a = 1.0;
  double law_b = 0.0;
  std::string law_table;  // CSV path for lipschitz-map
  double law_lipschitz = 1.0;

  std::string g_kind = "zero";  // | constant | linear | clipped-norm
  double g_c = 0.0;
  std::vector<double> g_a;
  double g_cap = 10.0;

  double t = 1.0;
  std::vector<double> x;  // empty = origin
  std::vector<double> eps_list = {0.2, 0.14, 0.1};
  double gamma = 0.5;  // r_eps = max(1, r_c * eps^-gamma)
  double r_c = 1.0;

  int64_t replicates = 64;
  uint64_t seed = 20260801;

  std::string beta_mode = "auto";  // auto: beta = beta_frac * beta0(law, rho_d)
  double beta = 0.3;               // used when beta_mode == "fixed"
  double beta_frac = 0.5;
  double rho_hat = -1.0;  // < 0: estimate by simulation when needed

  std::string eta_mode = "auto";  // auto: estimate at t = eta_t; value: use eta_value
  double eta_value = 0.0;
  double eta_se = 0.0;
  int64_t eta_t = 32;
  int64_t eta_replicates = 200;

  std::string phi_kind = "smooth-bump";  // | tensor-cosine
  std::vector<double> phi_center;        // empty = origin
  double phi_radius = 1.0;

  double budget_bytes = 8e9;
  int grid_n = 128;  // fine-grid resolution for reference integrals
  bool parallel = true;
  std::string out_dir = "out";

  void validate() const;
  NoiseLaw make_law() const;
  InitialCondition make_g() const;
  TestFunction make_phi() const;
  std::vector<double> point() const;  // x, defaulted to the origin

  std::string to_json_text() const;
  static ExperimentConfig from_json_text(const std::string& text);
};

// config resolved against the model: beta and eta pinned to numbers
struct ResolvedParams {
  NoiseLaw law = NoiseLaw::standard_gaussian();
  InitialCondition g = InitialCondition::zero();
  double beta = 0.0;
  double m_beta = 1.0;
  double rho = 0.0;
  std::optional<double> beta0_value;
  std::string rho_source;  // "supplied" or "estimated(T=...,M=...)"
  double eta_hat = 0.0;
  double eta_se = 0.0;
  int64_t eta_t = 0;
  std::string eta_source;  // "supplied" or "estimated(t=...,M=...)"
};
ResolvedParams resolve_params(const ExperimentConfig& cfg);

// one row of the eps ladder for the pointwise (smoothed) statistic
struct TheoremRow {
  double eps = 0.0;
  int64_t t_eps = 0;
  double r_eps = 0.0;
  int64_t ball_sites = 0;
  double h_ref = 0.0;  // Cole-Hopf h(t,x)
  double mean = 0.0;   // mean of f_tilde over replicates
  double se = 0.0;
  double bias = 0.0;      // mean - h_ref
  double variance = 0.0;  // population variance of f_tilde
  double mse = 0.0;       // mean of (f_tilde - h_ref)^2; equals bias^2 + variance
  double mse_se = 0.0;
  // paired with the previous (coarser) eps on the same environments
  double pair_drop = 0.0;  // mean over replicates of sqerr(prev) - sqerr(cur)
  double pair_drop_se = 0.0;
  bool has_pair = false;
};

struct TheoremResult {
  ResolvedParams params;
  std::vector<TheoremRow> rows;                // eps descending, as configured
  std::vector<std::vector<double>> f_samples;  // [eps index][replicate]
};

// one row of the eps ladder for the weak-integral statistic
struct CorollaryRow {
  double eps = 0.0;
  int64_t t_eps = 0;
  double ref = 0.0;   // integral of h(t,.) phi
  double mean = 0.0;  // mean of the lattice pairing over replicates
  double se = 0.0;
  double sq_gap_mean = 0.0;  // mean of (pairing - ref)^2
  double sq_gap_se = 0.0;
  double pair_drop = 0.0;
  double pair_drop_se = 0.0;
  bool has_pair = false;
};

struct CorollaryResult {
  ResolvedParams params;
  double phi_integral = 0.0;  // integral of phi alone, for reference
  std::vector<CorollaryRow> rows;
  std::vector<std::vector<double>> i_samples;  // [eps index][replicate]
};

struct CombinedResult {
  bool has_theorem = false;
  bool has_corollary = false;
  TheoremResult theorem;
  CorollaryResult corollary;
};

// Runs the eps ladder with common random numbers: replicate r uses the same
// environment seed at every eps, so squared errors can be differenced
// pairwise down the ladder. When both statistics are requested they share
// one polymer surface per (eps, replicate).
CombinedResult run_experiment(const ExperimentConfig& cfg, bool want_theorem,
                              bool want_corollary);
TheoremResult run_theorem(const ExperimentConfig& cfg);
CorollaryResult run_corollary(const ExperimentConfig& cfg);

// monotone-decrease report against paired standard errors
struct LadderCheck {
  bool decreasing = true;  // every adjacent pair_drop > z * pair_drop_se
  double min_margin = 0.0; // min over pairs of pair_drop / pair_drop_se
};
LadderCheck check_theorem_ladder(const TheoremResult& r, double z);
LadderCheck check_corollary_ladder(const CorollaryResult& r, double z);

// ---- CSV / manifest I/O ----

std::string format_g17(double v);  // %.17g, enough digits to round-trip a double

void write_theorem_csv(const std::string& path, const TheoremResult& r);
void write_corollary_csv(const std::string& path, const CorollaryResult& r);

// manifest: argv echo, config echo, resolved parameters, seed streams,
// toolchain versions, wall time. rerun() re-executes the argv with --out
// redirected, which must reproduce output files byte for byte.
void write_manifest(const std::string& path, const std::vector<std::string>& argv,
                    const ExperimentConfig* cfg, const ResolvedParams* params,
                    const std::vector<std::string>& outputs, double wall_seconds);
std::vector<std::string> read_manifest_argv(const std::string& path);
ExperimentConfig read_manifest_config(const std::string& path);

// seed streams: replicate environments, eta estimation, quick rho runs
inline constexpr uint64_t kStreamEnv = 101;
inline constexpr uint64_t kStreamEtaBase = 103;
inline constexpr uint64_t kStreamRhoQuick = 105;

}  // namespace dpkz
