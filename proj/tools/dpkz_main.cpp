#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpkz/harness.hpp"
#include "dpkz/walk.hpp"

namespace fs = std::filesystem;
using namespace dpkz;

namespace {

int exit_code_for(const std::string& category) {
  if (category == "config") return 2;
  if (category == "estimation") return 3;
  if (category == "cone") return 4;
  if (category == "coverage") return 5;
  if (category == "budget") return 6;
  if (category == "io") return 7;
  return 10;
}

void report_error(const std::string& category, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"category", category}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// split "affine:1.5,0.2" into ("affine", {"1.5","0.2"})
std::pair<std::string, std::vector<std::string>> split_spec(const std::string& s) {
  const auto colon = s.find(':');
  std::pair<std::string, std::vector<std::string>> out;
  out.first = s.substr(0, colon);
  if (colon == std::string::npos) return out;
  std::stringstream rest(s.substr(colon + 1));
  std::string tok;
  while (std::getline(rest, tok, ',')) out.second.push_back(tok);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse '" + s + "' as a number for " + what);
  }
}

// --law standard-gaussian | affine:a,b | table:path[:K]
void apply_law_spec(ExperimentConfig& cfg, const std::string& spec) {
  const auto [head, args] = split_spec(spec);
  if (head == "standard-gaussian") {
    cfg.law_kind = "standard-gaussian";
  } else if (head == "affine") {
    if (args.size() != 2) throw ConfigError("--law affine needs affine:a,b");
    cfg.law_kind = "affine-gaussian";
    cfg.law_a = parse_double(args[0], "--law");
    cfg.law_b = parse_double(args[1], "--law");
  } else if (head == "table") {
    if (args.empty() || args.size() > 2)
      throw ConfigError("--law table needs table:path[:K] (path must not contain ',')");
    cfg.law_kind = "lipschitz-map";
    cfg.law_table = args[0];
    if (args.size() == 2) cfg.law_lipschitz = parse_double(args[1], "--law");
  } else {
    throw ConfigError("unknown --law '" + spec +
                      "' (standard-gaussian | affine:a,b | table:path[:K])");
  }
}

// --g zero | constant:c | linear:a1,...,ad | clipped-norm:cap
void apply_g_spec(ExperimentConfig& cfg, const std::string& spec) {
  const auto [head, args] = split_spec(spec);
  if (head == "zero") {
    cfg.g_kind = "zero";
  } else if (head == "constant") {
    if (args.size() != 1) throw ConfigError("--g constant needs constant:c");
    cfg.g_kind = "constant";
    cfg.g_c = parse_double(args[0], "--g");
  } else if (head == "linear") {
    if (args.empty()) throw ConfigError("--g linear needs linear:a1,...,ad");
    cfg.g_kind = "linear";
    cfg.g_a.clear();
    for (const auto& a : args) cfg.g_a.push_back(parse_double(a, "--g"));
  } else if (head == "clipped-norm") {
    cfg.g_kind = "clipped-norm";
    cfg.g_cap = args.empty() ? 10.0 : parse_double(args[0], "--g");
  } else {
    throw ConfigError("unknown --g '" + spec +
                      "' (zero | constant:c | linear:a1,...,ad | clipped-norm[:cap])");
  }
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void finish_csv(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

std::string join_coords(const std::vector<int64_t>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

int run_args(const std::vector<std::string>& args);

// ---- subcommand bodies ----

void cmd_walk(const std::vector<std::string>& argv_echo, const std::string& quantity,
              WalkConfig wc, const std::vector<int64_t>& offset,
              std::vector<int64_t> horizons, const std::vector<int64_t>& kx,
              const std::vector<int64_t>& ky, const std::vector<int64_t>& n_list,
              const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ensure_dir(out_dir);
  std::vector<std::string> outputs;

  if (quantity == "rho") {
    const RhoEstimate est = rho_d(wc);
    const std::string path = join_path(out_dir, "rho.csv");
    auto f = open_csv(path);
    f << "d,horizon,replicates,rho_hat,se,truncation_bracket,calibration_c\n";
    f << wc.d << ',' << wc.horizon << ',' << wc.replicates << ','
      << format_g17(est.stats.mean) << ',' << format_g17(est.stats.se) << ','
      << format_g17(est.truncation_bracket) << ',' << format_g17(est.calibration_c)
      << '\n';
    finish_csv(f, path);
    outputs.push_back("rho.csv");
  } else if (quantity == "intersections") {
    std::vector<int64_t> off = offset.empty() ? std::vector<int64_t>(size_t(wc.d), 0)
                                              : offset;
    if (horizons.empty()) horizons = {wc.horizon};
    const auto samples = sample_intersections(wc, off, horizons);
    const std::string path = join_path(out_dir, "intersections.csv");
    auto f = open_csv(path);
    f << "horizon,mean_coincidences,se,hit_rate,hit_se\n";
    for (size_t hi = 0; hi < horizons.size(); ++hi) {
      Welford n_acc, hit_acc;
      for (const auto& s : samples) {
        n_acc.add(double(s.n_at[hi]));
        const bool hit = s.first_meeting >= 0 && s.first_meeting <= horizons[hi];
        hit_acc.add(hit ? 1.0 : 0.0);
      }
      const RunStats ns = n_acc.stats(), hs = hit_acc.stats();
      f << horizons[hi] << ',' << format_g17(ns.mean) << ',' << format_g17(ns.se) << ','
        << format_g17(hs.mean) << ',' << format_g17(hs.se) << '\n';
    }
    finish_csv(f, path);
    outputs.push_back("intersections.csv");
  } else if (quantity == "kappa") {
    if (int(kx.size()) != wc.d || int(ky.size()) != wc.d)
      throw ConfigError("kappa needs --x and --y with d components each");
    const RunStats st = kappa_hat(wc, kx, ky);
    const std::string path = join_path(out_dir, "kappa.csv");
    auto f = open_csv(path);
    f << "x,y,kappa_hat,se,replicates\n";
    f << '"' << join_coords(kx) << "\",\"" << join_coords(ky) << "\","
      << format_g17(st.mean) << ',' << format_g17(st.se) << ',' << st.n << '\n';
    finish_csv(f, path);
    outputs.push_back("kappa.csv");
  } else if (quantity == "clt") {
    const auto rows = local_clt_check(wc, n_list);
    const std::string path = join_path(out_dir, "clt.csv");
    auto f = open_csv(path);
    f << "n,sup_mass,scaled,se\n";
    for (const auto& r : rows)
      f << r.n << ',' << format_g17(r.sup_mass) << ',' << format_g17(r.scaled) << ','
        << format_g17(r.se) << '\n';
    finish_csv(f, path);
    outputs.push_back("clt.csv");
  } else {
    throw ConfigError("unknown --quantity '" + quantity +
                      "' (rho | intersections | kappa | clt)");
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(join_path(out_dir, "manifest.json"), argv_echo, nullptr, nullptr,
                 outputs, wall);
}

void cmd_polymer(const std::vector<std::string>& argv_echo, const ExperimentConfig& cfg,
                 double eps, int64_t t, const std::vector<int64_t>& site, int64_t pad,
                 const std::string& emit, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(eps > 0.0) || !(eps < 1.0)) throw ConfigError("--eps must lie in (0,1)");
  if (t < 1) throw ConfigError("--t-steps must be >= 1");
  const NoiseLaw law = cfg.make_law();
  const InitialCondition g = cfg.make_g();
  g.validate(cfg.d);
  const double beta = cfg.beta;
  if (!(beta > 0.0)) throw ConfigError("polymer needs a fixed positive --beta");
  std::vector<int64_t> x = site.empty() ? std::vector<int64_t>(size_t(cfg.d), 0) : site;
  if (int(x.size()) != cfg.d) throw ConfigError("--site needs d components");

  ensure_dir(out_dir);
  std::vector<std::string> outputs;

  if (emit == "sites") {
    const Environment env =
        Environment::hashed(derive_seed(cfg.seed, kStreamEnv, 0), law);
    const Slab s = polymer_surface(env, beta, g, eps, t, x, pad, cfg.parallel);
    const std::string path = join_path(out_dir, "sites.csv");
    auto f = open_csv(path);
    f << "t";
    for (int i = 1; i <= cfg.d; ++i) f << ",x" << i;
    f << ",f\n";
    s.for_each_in_radius(s.valid_radius, [&](const int64_t* z, int64_t idx) {
      f << s.t;
      for (int i = 0; i < cfg.d; ++i) f << ',' << z[i];
      f << ',' << format_g17(s.v[size_t(idx)] / beta) << '\n';
    });
    finish_csv(f, path);
    outputs.push_back("sites.csv");
  } else if (emit == "stats") {
    const int64_t M = cfg.replicates;
    std::vector<double> ys(static_cast<size_t>(M)), fs(static_cast<size_t>(M)), zs(static_cast<size_t>(M));
    for (int64_t rep = 0; rep < M; ++rep) {
      const Environment env =
          Environment::hashed(derive_seed(cfg.seed, kStreamEnv, uint64_t(rep)), law);
      const NormalizedPoint y = normalized_Y(env, law, beta, t, x, cfg.parallel);
      ys[size_t(rep)] = y.value;
      fs[size_t(rep)] = y.F;
      zs[size_t(rep)] = partition_Z(env, law, beta, g, eps, t, x, cfg.parallel).value;
    }
    const std::string path = join_path(out_dir, "stats.csv");
    auto f = open_csv(path);
    f << "quantity,n,mean,se,variance\n";
    const auto row = [&](const char* q, const std::vector<double>& v) {
      const RunStats st = summarize(v.data(), M);
      f << q << ',' << st.n << ',' << format_g17(st.mean) << ',' << format_g17(st.se)
        << ',' << format_g17(st.variance) << '\n';
    };
    row("Y", ys);
    row("F", fs);
    row("Z", zs);
    finish_csv(f, path);
    outputs.push_back("stats.csv");
  } else {
    throw ConfigError("unknown --emit '" + emit + "' (sites | stats)");
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(join_path(out_dir, "manifest.json"), argv_echo, nullptr, nullptr,
                 outputs, wall);
}

void cmd_colehopf(const std::vector<std::string>& argv_echo, const ExperimentConfig& cfg,
                  const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const InitialCondition g = cfg.make_g();
  g.validate(cfg.d);
  if (!(cfg.beta > 0.0)) throw ConfigError("colehopf needs a fixed positive --beta");
  const auto rows = glim_check(g, cfg.beta, cfg.d, cfg.t, cfg.point(), cfg.eps_list,
                               cfg.budget_bytes);
  ensure_dir(out_dir);
  const std::string path = join_path(out_dir, "glim.csv");
  auto f = open_csv(path);
  f << "eps,t_eps,discrete,continuum,gap\n";
  for (const auto& r : rows)
    f << format_g17(r.eps) << ',' << r.t_eps << ',' << format_g17(r.discrete) << ','
      << format_g17(r.continuum) << ',' << format_g17(r.gap) << '\n';
  finish_csv(f, path);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(join_path(out_dir, "manifest.json"), argv_echo, nullptr, nullptr,
                 {"glim.csv"}, wall);
}

void cmd_scale(const std::vector<std::string>& argv_echo, const ExperimentConfig& cfg,
               int64_t rep, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const ResolvedParams params = resolve_params(cfg);
  ensure_dir(out_dir);
  const std::string path = join_path(out_dir, "scale.csv");
  auto f = open_csv(path);
  f << "eps,t_eps,r_eps,ball_sites,X,f_tilde,f_unsmoothed\n";
  const Environment env = Environment::hashed(
      derive_seed(cfg.seed, kStreamEnv, uint64_t(rep)), params.law);
  for (const double eps : cfg.eps_list) {
    const ScalingPoint sp = ScalingPoint::make(eps, cfg.t, cfg.point(), cfg.gamma, cfg.r_c);
    const int64_t pad = int64_t(std::floor(sp.r_eps + 1e-12));
    const Slab s = polymer_surface(env, params.beta, params.g, eps, sp.t_eps, sp.x_eps,
                                   pad, cfg.parallel);
    const SmoothedValue sv = smoothed_surface(s, sp, params.beta, params.law, params.eta_hat);
    const double fu = unsmoothed_value(s, sp.x_eps, params.beta, params.law, params.eta_hat);
    f << format_g17(eps) << ',' << sp.t_eps << ',' << format_g17(sp.r_eps) << ','
      << sv.ball_sites << ',' << format_g17(sv.X) << ',' << format_g17(sv.f_tilde) << ','
      << format_g17(fu) << '\n';
  }
  finish_csv(f, path);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(join_path(out_dir, "manifest.json"), argv_echo, &cfg, &params,
                 {"scale.csv"}, wall);
}

void cmd_eta(const std::vector<std::string>& argv_echo, const ExperimentConfig& cfg,
             const std::vector<int64_t>& t_list, const std::vector<double>& thetas,
             const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const NoiseLaw law = cfg.make_law();
  if (!(cfg.beta > 0.0)) throw ConfigError("eta needs a fixed positive --beta");
  ensure_dir(out_dir);
  std::vector<std::string> outputs;

  const auto pts = eta_estimate(law, cfg.beta, cfg.d, t_list, cfg.eta_replicates,
                                derive_seed(cfg.seed, kStreamEtaBase, 0), cfg.parallel);
  const std::string path = join_path(out_dir, "eta.csv");
  auto f = open_csv(path);
  f << "t,eta_hat,se,n\n";
  for (const auto& p : pts)
    f << p.t << ',' << format_g17(p.stats.mean) << ',' << format_g17(p.stats.se) << ','
      << p.stats.n << '\n';
  finish_csv(f, path);
  outputs.push_back("eta.csv");

  if (!thetas.empty()) {
    const auto rows = lower_tail_check(law, cfg.beta, cfg.d, thetas, t_list,
                                       cfg.eta_replicates,
                                       derive_seed(cfg.seed, kStreamEtaBase, 0),
                                       cfg.parallel);
    const std::string lpath = join_path(out_dir, "lower_tail.csv");
    auto lf = open_csv(lpath);
    lf << "theta,t,mean,se,n\n";
    for (const auto& r : rows)
      lf << format_g17(r.theta) << ',' << r.t << ',' << format_g17(r.stats.mean) << ','
         << format_g17(r.stats.se) << ',' << r.stats.n << '\n';
    finish_csv(lf, lpath);
    outputs.push_back("lower_tail.csv");
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(join_path(out_dir, "manifest.json"), argv_echo, nullptr, nullptr,
                 outputs, wall);
}

void cmd_experiment(const std::vector<std::string>& argv_echo, const ExperimentConfig& cfg,
                    bool theorem, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ensure_dir(out_dir);
  const CombinedResult res = run_experiment(cfg, theorem, !theorem);
  std::vector<std::string> outputs;
  const ResolvedParams* params = nullptr;
  if (theorem) {
    write_theorem_csv(join_path(out_dir, "theorem.csv"), res.theorem);
    outputs.push_back("theorem.csv");
    params = &res.theorem.params;
  } else {
    write_corollary_csv(join_path(out_dir, "corollary.csv"), res.corollary);
    outputs.push_back("corollary.csv");
    params = &res.corollary.params;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(join_path(out_dir, "manifest.json"), argv_echo, &cfg, params, outputs,
                 wall);
}

void cmd_rerun(const std::string& manifest_path, const std::string& out_dir) {
  std::vector<std::string> argv = read_manifest_argv(manifest_path);
  // redirect --out, keep everything else exactly as recorded
  std::vector<std::string> cleaned;
  for (size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--out") {
      ++i;  // skip its value too
      continue;
    }
    if (argv[i].rfind("--out=", 0) == 0) continue;
    cleaned.push_back(argv[i]);
  }
  cleaned.push_back("--out");
  cleaned.push_back(out_dir);
  const int rc = run_args(cleaned);
  if (rc != 0) throw Error("internal", "rerun of the recorded command failed");
}

// ---- CLI wiring ----

int run_args(const std::vector<std::string>& args) {
  // load --config first so explicit flags override file values
  ExperimentConfig cfg;
  for (size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
    if (!path.empty()) {
      std::ifstream f(path, std::ios::binary);
      if (!f) throw IoError("cannot open config '" + path + "'");
      std::stringstream ss;
      ss << f.rdbuf();
      cfg = ExperimentConfig::from_json_text(ss.str());
      break;
    }
  }

  CLI::App app{"directed-polymer surface simulator and KPZ scaling-limit checks"};
  app.require_subcommand(1);

  std::string config_path, law_spec, g_spec, beta_spec, eta_spec;
  bool serial = false;

  const auto add_model_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("-d,--dim", cfg.d, "lattice dimension");
    sub->add_option("--law", law_spec,
                    "noise law: standard-gaussian | affine:a,b | table:path[:K]");
    sub->add_option("--g", g_spec,
                    "initial profile: zero | constant:c | linear:a1,..,ad | clipped-norm[:cap]");
    sub->add_option("--seed", cfg.seed, "base seed");
    sub->add_flag("--serial", serial, "disable the worker pool");
  };
  const auto add_experiment_options = [&](CLI::App* sub) {
    add_model_options(sub);
    sub->add_option("--t", cfg.t, "macroscopic time");
    sub->add_option("--x", cfg.x, "macroscopic point (d components)")->delimiter(',');
    sub->add_option("--eps", cfg.eps_list, "eps ladder, strictly decreasing")->delimiter(',');
    sub->add_option("--gamma", cfg.gamma, "radius exponent: r_eps = max(1, c eps^-gamma)");
    sub->add_option("--r-c", cfg.r_c, "radius prefactor c");
    sub->add_option("--replicates,-M", cfg.replicates, "environments per eps");
    sub->add_option("--beta", beta_spec, "'auto' (beta_frac * beta0) or a number");
    sub->add_option("--beta-frac", cfg.beta_frac, "fraction of beta0 in auto mode");
    sub->add_option("--rho-hat", cfg.rho_hat, "return probability; <0 = estimate");
    sub->add_option("--eta", eta_spec, "'auto' (estimate at eta-t) or a number");
    sub->add_option("--eta-se", cfg.eta_se, "se to record with a supplied eta");
    sub->add_option("--eta-t", cfg.eta_t, "time used by the auto eta estimate");
    sub->add_option("--eta-replicates", cfg.eta_replicates, "replicates for auto eta");
    sub->add_option("--phi", cfg.phi_kind, "test function: smooth-bump | tensor-cosine");
    sub->add_option("--phi-center", cfg.phi_center, "test-function center")->delimiter(',');
    sub->add_option("--phi-radius", cfg.phi_radius, "test-function support radius");
    sub->add_option("--budget-bytes", cfg.budget_bytes, "memory budget per replicate");
    sub->add_option("--grid-n", cfg.grid_n, "reference-quadrature resolution per axis");
    sub->add_option("--out", cfg.out_dir, "output directory");
  };
  const auto finalize_cfg = [&]() {
    if (!law_spec.empty()) apply_law_spec(cfg, law_spec);
    if (!g_spec.empty()) apply_g_spec(cfg, g_spec);
    if (!beta_spec.empty()) {
      if (beta_spec == "auto") {
        cfg.beta_mode = "auto";
      } else {
        cfg.beta_mode = "fixed";
        cfg.beta = parse_double(beta_spec, "--beta");
      }
    }
    if (!eta_spec.empty()) {
      if (eta_spec == "auto") {
        cfg.eta_mode = "auto";
      } else {
        cfg.eta_mode = "value";
        cfg.eta_value = parse_double(eta_spec, "--eta");
      }
    }
    if (serial) cfg.parallel = false;
  };

  // walk
  auto* walk = app.add_subcommand("walk", "simple-random-walk Monte Carlo quantities");
  std::string walk_quantity;
  WalkConfig wc;
  std::vector<int64_t> walk_offset, walk_horizons, walk_x, walk_y;
  std::vector<int64_t> walk_nlist = {4, 16, 64};
  std::string walk_out = "out";
  walk->add_option("--quantity", walk_quantity, "rho | intersections | kappa | clt")
      ->required();
  walk->add_option("-d,--dim", wc.d, "lattice dimension");
  walk->add_option("--horizon", wc.horizon, "steps per walk");
  walk->add_option("--replicates,-M", wc.replicates, "independent walks (or pairs)");
  walk->add_option("--seed", wc.seed, "base seed");
  walk->add_option("--offset", walk_offset, "initial displacement (intersections)")
      ->delimiter(',');
  walk->add_option("--horizons", walk_horizons, "coincidence-count checkpoints")
      ->delimiter(',');
  walk->add_option("--x", walk_x, "first start point (kappa)")->delimiter(',');
  walk->add_option("--y", walk_y, "second start point (kappa)")->delimiter(',');
  walk->add_option("--n-list", walk_nlist, "times for the local CLT table")->delimiter(',');
  walk->add_option("--out", walk_out, "output directory");
  walk->callback([&]() {
    cmd_walk(args, walk_quantity, wc, walk_offset, walk_horizons, walk_x, walk_y,
             walk_nlist, walk_out);
  });

  // polymer
  auto* poly = app.add_subcommand("polymer", "run the surface engine directly");
  double poly_eps = 0.1;
  int64_t poly_t = 16, poly_pad = 0, scale_rep = 0;
  std::vector<int64_t> poly_site;
  std::string poly_emit = "stats";
  add_model_options(poly);
  poly->add_option("--beta", beta_spec, "inverse temperature (number)");
  poly->add_option("--eps", poly_eps, "lattice scale for the initial profile");
  poly->add_option("--t-steps", poly_t, "recursion steps");
  poly->add_option("--site", poly_site, "lattice point (d components)")->delimiter(',');
  poly->add_option("--pad", poly_pad, "extra exact radius kept at the final time");
  poly->add_option("--replicates,-M", cfg.replicates, "environments (stats mode)");
  poly->add_option("--emit", poly_emit, "sites | stats");
  poly->add_option("--out", cfg.out_dir, "output directory");
  poly->callback([&]() {
    finalize_cfg();
    cmd_polymer(args, cfg, poly_eps, poly_t, poly_site, poly_pad, poly_emit, cfg.out_dir);
  });

  // colehopf
  auto* ch = app.add_subcommand("colehopf",
                                "discrete heat semigroup vs the continuum Cole-Hopf h");
  add_model_options(ch);
  ch->add_option("--beta", beta_spec, "inverse temperature (number)");
  ch->add_option("--t", cfg.t, "macroscopic time");
  ch->add_option("--x", cfg.x, "macroscopic point")->delimiter(',');
  ch->add_option("--eps", cfg.eps_list, "eps ladder")->delimiter(',');
  ch->add_option("--budget-bytes", cfg.budget_bytes, "memory budget for the exact sweep");
  ch->add_option("--out", cfg.out_dir, "output directory");
  ch->callback([&]() {
    finalize_cfg();
    cmd_colehopf(args, cfg, cfg.out_dir);
  });

  // scale
  auto* sc = app.add_subcommand("scale", "rescaled surface values for one environment");
  add_experiment_options(sc);
  sc->add_option("--rep", scale_rep, "replicate index of the environment");
  sc->callback([&]() {
    finalize_cfg();
    cmd_scale(args, cfg, scale_rep, cfg.out_dir);
  });

  // eta
  auto* et = app.add_subcommand("eta", "renormalization constant estimates");
  std::vector<int64_t> eta_tlist = {8, 16, 32};
  std::vector<double> eta_thetas;
  add_model_options(et);
  et->add_option("--beta", beta_spec, "inverse temperature (number)");
  et->add_option("--t-list", eta_tlist, "checkpoints, strictly increasing")->delimiter(',');
  et->add_option("--replicates,-M", cfg.eta_replicates, "environments");
  et->add_option("--thetas", eta_thetas, "also tabulate E exp(-theta F)")->delimiter(',');
  et->add_option("--out", cfg.out_dir, "output directory");
  et->callback([&]() {
    finalize_cfg();
    if (cfg.beta_mode != "fixed" && beta_spec.empty())
      throw ConfigError("eta needs --beta <number>");
    cmd_eta(args, cfg, eta_tlist, eta_thetas, cfg.out_dir);
  });

  // theorem / corollary
  auto* th = app.add_subcommand("theorem",
                                "pointwise smoothed-surface convergence experiment");
  add_experiment_options(th);
  th->callback([&]() {
    finalize_cfg();
    cmd_experiment(args, cfg, true, cfg.out_dir);
  });

  auto* co = app.add_subcommand("corollary", "weak-integral convergence experiment");
  add_experiment_options(co);
  co->callback([&]() {
    finalize_cfg();
    cmd_experiment(args, cfg, false, cfg.out_dir);
  });

  // rerun
  auto* rr = app.add_subcommand("rerun", "re-execute a run from its manifest");
  std::string rr_manifest, rr_out;
  rr->add_option("--manifest", rr_manifest, "manifest.json of the recorded run")
      ->required();
  rr->add_option("--out", rr_out, "fresh output directory")->required();
  rr->callback([&]() { cmd_rerun(rr_manifest, rr_out); });

  std::vector<const char*> cargv;
  cargv.push_back("dpkz");
  for (const auto& s : args) cargv.push_back(s.c_str());
  try {
    app.parse(int(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_args(args);
  } catch (const Error& e) {
    report_error(e.category, e.what());
    return exit_code_for(e.category);
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 10;
  }
}
