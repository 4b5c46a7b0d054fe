#include "dpkz/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "dpkz/walk.hpp"

namespace dpkz {

using nlohmann::json;

// ---- config ----

std::vector<double> ExperimentConfig::point() const {
  if (x.empty()) return std::vector<double>(size_t(d), 0.0);
  return x;
}

NoiseLaw ExperimentConfig::make_law() const {
  if (law_kind == "standard-gaussian") return NoiseLaw::standard_gaussian();
  if (law_kind == "affine-gaussian") return NoiseLaw::affine_gaussian(law_a, law_b);
  if (law_kind == "lipschitz-map") {
    if (law_table.empty())
      throw ConfigError("law_kind=lipschitz-map needs law_table (CSV path)");
    return NoiseLaw::lipschitz_map_from_csv(law_table, law_lipschitz);
  }
  throw ConfigError("unknown law_kind '" + law_kind +
                    "' (standard-gaussian | affine-gaussian | lipschitz-map)");
}

InitialCondition ExperimentConfig::make_g() const {
  if (g_kind == "zero") return InitialCondition::zero();
  if (g_kind == "constant") return InitialCondition::constant(g_c);
  if (g_kind == "linear") {
    if (int(g_a.size()) != d)
      throw ConfigError("g_kind=linear needs g_a with exactly d components");
    return InitialCondition::linear(g_a);
  }
  if (g_kind == "clipped-norm") return InitialCondition::clipped_norm(g_cap);
  throw ConfigError("unknown g_kind '" + g_kind +
                    "' (zero | constant | linear | clipped-norm)");
}

TestFunction ExperimentConfig::make_phi() const {
  std::vector<double> c = phi_center.empty() ? std::vector<double>(size_t(d), 0.0)
                                             : phi_center;
  if (phi_kind == "smooth-bump") return TestFunction::smooth_bump(std::move(c), phi_radius);
  if (phi_kind == "tensor-cosine")
    return TestFunction::tensor_cosine(std::move(c), phi_radius);
  throw ConfigError("unknown phi_kind '" + phi_kind +
                    "' (smooth-bump | tensor-cosine)");
}

void ExperimentConfig::validate() const {
  if (d < 3 || d > 12)
    throw ConfigError("experiments need 3 <= d <= 12 (the walk must be transient)");
  make_law();  // validates the law parameters
  make_g().validate(d);
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("t must be positive and finite");
  if (!x.empty() && int(x.size()) != d)
    throw ConfigError("x must have d components (or be empty for the origin)");
  for (double xi : x)
    if (!std::isfinite(xi)) throw ConfigError("x must be finite");
  if (eps_list.empty()) throw ConfigError("eps_list must not be empty");
  for (size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0) || !(eps_list[i] < 1.0))
      throw ConfigError("every eps must lie in (0,1)");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw ConfigError("eps_list must be strictly decreasing");
  }
  if (!(gamma > 0.0) || !(gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  if (!(r_c > 0.0)) throw ConfigError("r_c must be positive");
  if (replicates < 2) throw ConfigError("replicates must be >= 2");
  if (beta_mode != "auto" && beta_mode != "fixed")
    throw ConfigError("beta_mode must be 'auto' or 'fixed'");
  if (beta_mode == "fixed" && (!(beta > 0.0) || !std::isfinite(beta)))
    throw ConfigError("fixed beta must be positive and finite");
  if (!(beta_frac > 0.0) || !(beta_frac <= 1.0))
    throw ConfigError("beta_frac must lie in (0,1]");
  if (rho_hat >= 1.0) throw ConfigError("rho_hat must be below 1");
  if (eta_mode != "auto" && eta_mode != "value")
    throw ConfigError("eta_mode must be 'auto' or 'value'");
  if (eta_mode == "value" && !std::isfinite(eta_value))
    throw ConfigError("eta_value must be finite");
  if (eta_t < 1) throw ConfigError("eta_t must be >= 1");
  if (eta_replicates < 2) throw ConfigError("eta_replicates must be >= 2");
  if (!phi_center.empty() && int(phi_center.size()) != d)
    throw ConfigError("phi_center must have d components (or be empty for the origin)");
  make_phi().validate(d);
  if (!(budget_bytes > 0.0)) throw ConfigError("budget_bytes must be positive");
  if (grid_n < 2) throw ConfigError("grid_n must be >= 2");
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["d"] = d;
  j["law_kind"] = law_kind;
  j["law_a"] = law_a;
  j["law_b"] = law_b;
  j["law_table"] = law_table;
  j["law_lipschitz"] = law_lipschitz;
  j["g_kind"] = g_kind;
  j["g_c"] = g_c;
  j["g_a"] = g_a;
  j["g_cap"] = g_cap;
  j["t"] = t;
  j["x"] = x;
  j["eps_list"] = eps_list;
  j["gamma"] = gamma;
  j["r_c"] = r_c;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["beta_mode"] = beta_mode;
  j["beta"] = beta;
  j["beta_frac"] = beta_frac;
  j["rho_hat"] = rho_hat;
  j["eta_mode"] = eta_mode;
  j["eta_value"] = eta_value;
  j["eta_se"] = eta_se;
  j["eta_t"] = eta_t;
  j["eta_replicates"] = eta_replicates;
  j["phi_kind"] = phi_kind;
  j["phi_center"] = phi_center;
  j["phi_radius"] = phi_radius;
  j["budget_bytes"] = budget_bytes;
  j["grid_n"] = grid_n;
  j["parallel"] = parallel;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const char* known[] = {
      "d", "law_kind", "law_a", "law_b", "law_table", "law_lipschitz",
      "g_kind", "g_c", "g_a", "g_cap", "t", "x", "eps_list", "gamma", "r_c",
      "replicates", "seed", "beta_mode", "beta", "beta_frac", "rho_hat",
      "eta_mode", "eta_value", "eta_se", "eta_t", "eta_replicates",
      "phi_kind", "phi_center", "phi_radius", "budget_bytes", "grid_n",
      "parallel", "out_dir"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || (item.key() == k);
    if (!ok) throw ConfigError("unknown config key '" + item.key() + "'");
  }

  ExperimentConfig c;
  try {
    c.d = j.value("d", c.d);
    c.law_kind = j.value("law_kind", c.law_kind);
    c.law_a = j.value("law_a", c.law_a);
    c.law_b = j.value("law_b", c.law_b);
    c.law_table = j.value("law_table", c.law_table);
    c.law_lipschitz = j.value("law_lipschitz", c.law_lipschitz);
    c.g_kind = j.value("g_kind", c.g_kind);
    c.g_c = j.value("g_c", c.g_c);
    c.g_a = j.value("g_a", c.g_a);
    c.g_cap = j.value("g_cap", c.g_cap);
    c.t = j.value("t", c.t);
    c.x = j.value("x", c.x);
    c.eps_list = j.value("eps_list", c.eps_list);
    c.gamma = j.value("gamma", c.gamma);
    c.r_c = j.value("r_c", c.r_c);
    c.replicates = j.value("replicates", c.replicates);
    c.seed = j.value("seed", c.seed);
    c.beta_mode = j.value("beta_mode", c.beta_mode);
    c.beta = j.value("beta", c.beta);
    c.beta_frac = j.value("beta_frac", c.beta_frac);
    c.rho_hat = j.value("rho_hat", c.rho_hat);
    c.eta_mode = j.value("eta_mode", c.eta_mode);
    c.eta_value = j.value("eta_value", c.eta_value);
    c.eta_se = j.value("eta_se", c.eta_se);
    c.eta_t = j.value("eta_t", c.eta_t);
    c.eta_replicates = j.value("eta_replicates", c.eta_replicates);
    c.phi_kind = j.value("phi_kind", c.phi_kind);
    c.phi_center = j.value("phi_center", c.phi_center);
    c.phi_radius = j.value("phi_radius", c.phi_radius);
    c.budget_bytes = j.value("budget_bytes", c.budget_bytes);
    c.grid_n = j.value("grid_n", c.grid_n);
    c.parallel = j.value("parallel", c.parallel);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  return c;
}

// ---- parameter resolution ----

ResolvedParams resolve_params(const ExperimentConfig& cfg) {
  cfg.validate();
  ResolvedParams p;
  p.law = cfg.make_law();
  p.g = cfg.make_g();

  if (cfg.beta_mode == "fixed") {
    p.beta = cfg.beta;
    p.rho = cfg.rho_hat;
    p.rho_source = cfg.rho_hat >= 0.0 ? "supplied" : "unused";
  } else {
    double rho = cfg.rho_hat;
    if (rho < 0.0) {
      WalkConfig wc;
      wc.d = cfg.d;
      wc.horizon = 20000;
      wc.replicates = 20000;
      wc.seed = derive_seed(cfg.seed, kStreamRhoQuick, 0);
      rho = rho_d(wc).stats.mean;
      p.rho_source = "estimated(T=20000,M=20000)";
    } else {
      p.rho_source = "supplied";
    }
    p.rho = rho;
    p.beta0_value = beta0(p.law, rho);
    if (!p.beta0_value)
      throw ConfigError(
          "no finite weak-disorder threshold found below the search cap for this "
          "law; set beta_mode=fixed and give beta explicitly");
    p.beta = cfg.beta_frac * *p.beta0_value;
  }
  p.m_beta = mgf(p.law, p.beta);

  if (cfg.eta_mode == "value") {
    p.eta_hat = cfg.eta_value;
    p.eta_se = cfg.eta_se;
    p.eta_t = cfg.eta_t;
    p.eta_source = "supplied";
  } else {
    const auto pts =
        eta_estimate(p.law, p.beta, cfg.d, {cfg.eta_t}, cfg.eta_replicates,
                     derive_seed(cfg.seed, kStreamEtaBase, 0), cfg.parallel);
    p.eta_hat = pts[0].stats.mean;
    p.eta_se = pts[0].stats.se;
    p.eta_t = cfg.eta_t;
    p.eta_source = "estimated(t=" + std::to_string(cfg.eta_t) +
                   ",M=" + std::to_string(cfg.eta_replicates) + ")";
  }
  return p;
}

// ---- the experiment proper ----

namespace {

struct EpsPlan {
  ScalingPoint sp;
  std::vector<int64_t> center;  // slab center
  int64_t pad = 0;              // exact radius needed at time t_eps
  std::vector<int64_t> lo, hi;  // corollary window (unused for theorem-only)
  int64_t ball_sites = 0;
  double bytes = 0.0;
};

EpsPlan plan_eps(const ExperimentConfig& cfg, double eps, const TestFunction& phi,
                 bool want_theorem, bool want_corollary) {
  EpsPlan pl;
  pl.sp = ScalingPoint::make(eps, cfg.t, cfg.point(), cfg.gamma, cfg.r_c);
  const int d = cfg.d;

  std::vector<int64_t> rlo(static_cast<size_t>(d)), rhi(static_cast<size_t>(d));
  bool have = false;
  if (want_theorem) {
    const int64_t padT = int64_t(std::floor(pl.sp.r_eps + 1e-12));
    for (int i = 0; i < d; ++i) {
      rlo[size_t(i)] = pl.sp.x_eps[size_t(i)] - padT;
      rhi[size_t(i)] = pl.sp.x_eps[size_t(i)] + padT;
    }
    have = true;
    pl.ball_sites = int64_t(ball_points(pl.sp.x_eps, pl.sp.r_eps).size());
  }
  if (want_corollary) {
    phi_lattice_window(phi, eps, d, pl.lo, pl.hi);
    for (int i = 0; i < d; ++i) {
      rlo[size_t(i)] = have ? std::min(rlo[size_t(i)], pl.lo[size_t(i)]) : pl.lo[size_t(i)];
      rhi[size_t(i)] = have ? std::max(rhi[size_t(i)], pl.hi[size_t(i)]) : pl.hi[size_t(i)];
    }
    have = true;
  }

  pl.center.resize(size_t(d));
  pl.pad = 0;
  for (int i = 0; i < d; ++i) {
    pl.center[size_t(i)] = rlo[size_t(i)] + (rhi[size_t(i)] - rlo[size_t(i)]) / 2;
    pl.pad = std::max(pl.pad, std::max(pl.center[size_t(i)] - rlo[size_t(i)],
                                       rhi[size_t(i)] - pl.center[size_t(i)]));
  }

  // slab values + the kernel's two ping-pong buffers, 8 bytes a site
  const double side = double(2 * (pl.sp.t_eps + pl.pad) + 1);
  pl.bytes = 24.0 * std::pow(side, double(d));
  return pl;
}

void add_pair_column(const std::vector<double>& prev_sq, const std::vector<double>& cur_sq,
                     double& drop, double& drop_se, bool& has_pair) {
  const int64_t M = int64_t(cur_sq.size());
  std::vector<double> diff(static_cast<size_t>(M));
  for (int64_t r = 0; r < M; ++r) diff[size_t(r)] = prev_sq[size_t(r)] - cur_sq[size_t(r)];
  const RunStats st = summarize(diff.data(), M);
  drop = st.mean;
  drop_se = st.se;
  has_pair = true;
}

}  // namespace

CombinedResult run_experiment(const ExperimentConfig& cfg, bool want_theorem,
                              bool want_corollary) {
  if (!want_theorem && !want_corollary)
    throw ConfigError("nothing to run: neither statistic requested");
  const ResolvedParams params = resolve_params(cfg);
  const int d = cfg.d;
  const int64_t M = cfg.replicates;
  const double beta = params.beta;
  const TestFunction phi = cfg.make_phi();
  const std::vector<double> x = cfg.point();
  const size_t ne = cfg.eps_list.size();

  // plan every rung up front; refuse with the feasible prefix if one is too big
  std::vector<EpsPlan> plans;
  plans.reserve(ne);
  for (size_t ei = 0; ei < ne; ++ei) {
    EpsPlan pl = plan_eps(cfg, cfg.eps_list[ei], phi, want_theorem, want_corollary);
    if (pl.bytes > cfg.budget_bytes) {
      std::ostringstream os;
      os << "eps=" << cfg.eps_list[ei] << " needs about " << pl.bytes
         << " bytes (box side " << 2 * (pl.sp.t_eps + pl.pad) + 1 << "^" << d
         << " plus kernel buffers), over the budget of " << cfg.budget_bytes
         << "; largest feasible ladder: {";
      for (size_t k = 0; k < ei; ++k) os << (k ? ", " : "") << cfg.eps_list[k];
      os << "}";
      throw BudgetError(os.str());
    }
    plans.push_back(std::move(pl));
  }

  std::vector<std::vector<double>> f_samples, i_samples;
  if (want_theorem) f_samples.assign(ne, std::vector<double>(size_t(M), 0.0));
  if (want_corollary) i_samples.assign(ne, std::vector<double>(size_t(M), 0.0));

  for (size_t ei = 0; ei < ne; ++ei) {
    const EpsPlan& pl = plans[ei];
    std::exception_ptr eptr = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
#endif
    for (int64_t rep = 0; rep < M; ++rep) {
      if (eptr) continue;
      try {
        // one environment per replicate, shared across the whole ladder
        const Environment env = Environment::hashed(
            derive_seed(cfg.seed, kStreamEnv, uint64_t(rep)), params.law);
        const Slab slab = polymer_surface(env, beta, params.g, pl.sp.eps, pl.sp.t_eps,
                                          pl.center, pl.pad, false);
        if (want_theorem)
          f_samples[ei][size_t(rep)] =
              smoothed_surface(slab, pl.sp, beta, params.law, params.eta_hat).f_tilde;
        if (want_corollary) {
          const LatticeField field =
              build_field(slab, beta, params.law, params.eta_hat, pl.lo, pl.hi);
          i_samples[ei][size_t(rep)] = weak_integral(field, phi, pl.sp.eps);
        }
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (!eptr) eptr = std::current_exception();
        }
      }
    }
    if (eptr) std::rethrow_exception(eptr);
  }

  CombinedResult out;
  out.has_theorem = want_theorem;
  out.has_corollary = want_corollary;

  if (want_theorem) {
    out.theorem.params = params;
    out.theorem.f_samples = f_samples;
    const HValue hv = cole_hopf_h(params.g, beta, d, cfg.t, x);
    std::vector<double> prev_sq;
    for (size_t ei = 0; ei < ne; ++ei) {
      TheoremRow row;
      row.eps = cfg.eps_list[ei];
      row.t_eps = plans[ei].sp.t_eps;
      row.r_eps = plans[ei].sp.r_eps;
      row.ball_sites = plans[ei].ball_sites;
      row.h_ref = hv.h;
      const RunStats st = summarize(f_samples[ei].data(), M);
      row.mean = st.mean;
      row.se = st.se;
      row.bias = st.mean - hv.h;
      Welford pop;
      std::vector<double> sq(static_cast<size_t>(M));
      for (int64_t r = 0; r < M; ++r) {
        const double f = f_samples[ei][size_t(r)];
        pop.add(f);
        sq[size_t(r)] = (f - hv.h) * (f - hv.h);
      }
      row.variance = pop.pop_variance();
      const RunStats mst = summarize(sq.data(), M);
      row.mse = mst.mean;
      row.mse_se = mst.se;
      if (ei > 0) add_pair_column(prev_sq, sq, row.pair_drop, row.pair_drop_se, row.has_pair);
      prev_sq = std::move(sq);
      out.theorem.rows.push_back(row);
    }
  }

  if (want_corollary) {
    out.corollary.params = params;
    out.corollary.i_samples = i_samples;
    out.corollary.phi_integral = reference_integral_phi(phi, d, cfg.grid_n);
    const double ref = reference_integral_h_phi(params.g, beta, d, cfg.t, phi, cfg.grid_n);
    std::vector<double> prev_sq;
    for (size_t ei = 0; ei < ne; ++ei) {
      CorollaryRow row;
      row.eps = cfg.eps_list[ei];
      row.t_eps = plans[ei].sp.t_eps;
      row.ref = ref;
      const RunStats st = summarize(i_samples[ei].data(), M);
      row.mean = st.mean;
      row.se = st.se;
      std::vector<double> sq(static_cast<size_t>(M));
      for (int64_t r = 0; r < M; ++r) {
        const double gap = i_samples[ei][size_t(r)] - ref;
        sq[size_t(r)] = gap * gap;
      }
      const RunStats gst = summarize(sq.data(), M);
      row.sq_gap_mean = gst.mean;
      row.sq_gap_se = gst.se;
      if (ei > 0) add_pair_column(prev_sq, sq, row.pair_drop, row.pair_drop_se, row.has_pair);
      prev_sq = std::move(sq);
      out.corollary.rows.push_back(row);
    }
  }
  return out;
}

TheoremResult run_theorem(const ExperimentConfig& cfg) {
  return run_experiment(cfg, true, false).theorem;
}

CorollaryResult run_corollary(const ExperimentConfig& cfg) {
  return run_experiment(cfg, false, true).corollary;
}

// ---- ladder checks ----

namespace {
LadderCheck check_pairs(const std::vector<double>& drops,
                        const std::vector<double>& ses, double z) {
  LadderCheck c;
  c.decreasing = true;
  c.min_margin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < drops.size(); ++i) {
    double margin;
    if (ses[i] > 0.0) {
      margin = drops[i] / ses[i];
    } else {
      margin = drops[i] > 0.0 ? std::numeric_limits<double>::infinity()
                              : (drops[i] < 0.0 ? -std::numeric_limits<double>::infinity()
                                                : 0.0);
    }
    c.min_margin = std::min(c.min_margin, margin);
    if (!(margin > z)) c.decreasing = false;
  }
  if (drops.empty()) c.min_margin = 0.0;
  return c;
}
}  // namespace

LadderCheck check_theorem_ladder(const TheoremResult& r, double z) {
  std::vector<double> drops, ses;
  for (const auto& row : r.rows)
    if (row.has_pair) {
      drops.push_back(row.pair_drop);
      ses.push_back(row.pair_drop_se);
    }
  return check_pairs(drops, ses, z);
}

LadderCheck check_corollary_ladder(const CorollaryResult& r, double z) {
  std::vector<double> drops, ses;
  for (const auto& row : r.rows)
    if (row.has_pair) {
      drops.push_back(row.pair_drop);
      ses.push_back(row.pair_drop_se);
    }
  return check_pairs(drops, ses, z);
}

// ---- CSV / manifest ----

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {
std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}
}  // namespace

void write_theorem_csv(const std::string& path, const TheoremResult& r) {
  auto f = open_out(path);
  f << "eps,t_eps,r_eps,ball_sites,h_ref,f_mean,f_se,bias,variance,mse,mse_se,"
       "pair_mse_drop,pair_mse_drop_se\n";
  for (const auto& row : r.rows) {
    f << format_g17(row.eps) << ',' << row.t_eps << ',' << format_g17(row.r_eps) << ','
      << row.ball_sites << ',' << format_g17(row.h_ref) << ',' << format_g17(row.mean)
      << ',' << format_g17(row.se) << ',' << format_g17(row.bias) << ','
      << format_g17(row.variance) << ',' << format_g17(row.mse) << ','
      << format_g17(row.mse_se) << ',';
    if (row.has_pair)
      f << format_g17(row.pair_drop) << ',' << format_g17(row.pair_drop_se);
    else
      f << ',';
    f << '\n';
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

void write_corollary_csv(const std::string& path, const CorollaryResult& r) {
  auto f = open_out(path);
  f << "eps,t_eps,ref_integral,pairing_mean,pairing_se,sq_gap_mean,sq_gap_se,"
       "pair_gap_drop,pair_gap_drop_se\n";
  for (const auto& row : r.rows) {
    f << format_g17(row.eps) << ',' << row.t_eps << ',' << format_g17(row.ref) << ','
      << format_g17(row.mean) << ',' << format_g17(row.se) << ','
      << format_g17(row.sq_gap_mean) << ',' << format_g17(row.sq_gap_se) << ',';
    if (row.has_pair)
      f << format_g17(row.pair_drop) << ',' << format_g17(row.pair_drop_se);
    else
      f << ',';
    f << '\n';
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

void write_manifest(const std::string& path, const std::vector<std::string>& argv,
                    const ExperimentConfig* cfg, const ResolvedParams* params,
                    const std::vector<std::string>& outputs, double wall_seconds) {
  json j;
  j["schema"] = "dpkz-manifest-v1";
  j["argv"] = argv;
  if (cfg != nullptr) {
    j["config"] = json::parse(cfg->to_json_text());
    j["seeds"] = {
        {"base", cfg->seed},
        {"env_stream", kStreamEnv},
        {"eta_stream", kStreamEtaBase},
        {"rho_stream", kStreamRhoQuick},
        {"derivation", "hash_chain(hash_chain(base ^ 5dc1a8f2d3b9e677, stream), replicate)"}};
  }
  if (params != nullptr) {
    json r;
    r["law"] = params->law.describe();
    r["beta"] = params->beta;
    if (params->beta0_value)
      r["beta0"] = *params->beta0_value;
    else
      r["beta0"] = nullptr;
    r["m_beta"] = params->m_beta;
    r["rho"] = params->rho;
    r["rho_source"] = params->rho_source;
    r["eta_hat"] = params->eta_hat;
    r["eta_se"] = params->eta_se;
    r["eta_t"] = params->eta_t;
    r["eta_source"] = params->eta_source;
    j["resolved"] = r;
  }
  j["versions"] = {{"artifact", "1.0.0"},
                   {"compiler", __VERSION__},
#ifdef _OPENMP
                   {"openmp", true}};
#else
                   {"openmp", false}};
#endif
  j["outputs"] = outputs;
  j["wall_seconds"] = wall_seconds;

  auto f = open_out(path);
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed for '" + path + "'");
}

namespace {
json load_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open manifest '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", std::string()) != "dpkz-manifest-v1")
    throw ConfigError("not a dpkz manifest: missing schema marker");
  return j;
}
}  // namespace

std::vector<std::string> read_manifest_argv(const std::string& path) {
  const json j = load_manifest(path);
  if (!j.contains("argv") || !j["argv"].is_array())
    throw ConfigError("manifest has no argv echo");
  return j["argv"].get<std::vector<std::string>>();
}

ExperimentConfig read_manifest_config(const std::string& path) {
  const json j = load_manifest(path);
  if (!j.contains("config") || !j["config"].is_object())
    throw ConfigError("manifest carries no experiment config");
  return ExperimentConfig::from_json_text(j["config"].dump());
}

}  // namespace dpkz
