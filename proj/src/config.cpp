#include "sbmpot/config.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sbmpot/martin.hpp"
#include "sbmpot/potential.hpp"
#include "sbmpot/verify.hpp"

namespace sbm {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

// tracks which keys were read and what value was used (default or given)
struct Resolver {
  const KeyValues& kv;
  KeyValues resolved;

  std::string str(const std::string& key, const std::string& def) {
    auto it = kv.find(key);
    std::string v = it != kv.end() ? it->second : def;
    resolved[key] = v;
    return v;
  }
  double num(const std::string& key, double def) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      resolved[key] = format(def);
      return def;
    }
    try {
      double v = std::stod(it->second);
      resolved[key] = it->second;
      return v;
    } catch (...) {
      throw ConfigError("key '" + key + "': expected a number, got '" +
                        it->second + "'");
    }
  }
  long integer(const std::string& key, long def) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      resolved[key] = std::to_string(def);
      return def;
    }
    try {
      long v = std::stol(it->second);
      resolved[key] = it->second;
      return v;
    } catch (...) {
      throw ConfigError("key '" + key + "': expected an integer, got '" +
                        it->second + "'");
    }
  }
  std::vector<double> numbers(const std::string& key, const std::string& def) {
    std::string v = str(key, def);
    std::vector<double> out;
    std::istringstream is(v);
    double x;
    while (is >> x) out.push_back(x);
    return out;
  }
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
};

std::string fmt(double v) { return Resolver::format(v); }

BernsteinSpec spec_from(Resolver& r) {
  std::string kind = r.str("process.kind", "stable");
  if (kind == "stable") return BernsteinSpec::stable(r.num("process.alpha", 1.0));
  if (kind == "stable_sum") {
    auto alphas = r.numbers("process.alphas", "1.0");
    auto weights = r.numbers("process.weights", "1.0");
    if (alphas.size() != weights.size())
      throw ConfigError("process.alphas and process.weights differ in length");
    std::vector<StableTerm> terms;
    for (size_t i = 0; i < alphas.size(); ++i)
      terms.push_back({weights[i], alphas[i]});
    return BernsteinSpec::stable_sum(terms);
  }
  if (kind == "relativistic")
    return BernsteinSpec::relativistic(r.num("process.alpha", 1.0),
                                       r.num("process.mass", 1.0));
  throw ConfigError("process.kind must be stable, stable_sum or relativistic");
}

Pt point_from(Resolver& r, const std::string& key, const std::string& def,
              int d) {
  auto v = r.numbers(key, def);
  if (static_cast<int>(v.size()) != d)
    throw ConfigError("key '" + key + "': expected " + std::to_string(d) +
                      " coordinates");
  Pt p{};
  for (int i = 0; i < d; ++i) p[i] = v[static_cast<size_t>(i)];
  return p;
}

OuterCharge charge_from(Resolver& r, int d) {
  OuterCharge c;
  auto breaks = r.numbers("charge.breaks", "");
  auto values = r.numbers("charge.values", "");
  if (!breaks.empty() || !values.empty()) {
    if (breaks.size() != values.size() + 1)
      throw ConfigError("charge.breaks must have one more entry than values");
    c.density = OuterCharge::RadialDensity{breaks, values};
  }
  std::string atom = r.str("charge.atom", "");
  if (!atom.empty()) {
    std::istringstream is(atom);
    Pt p{};
    double x;
    int i = 0;
    while (is >> x && i < d) p[i++] = x;
    if (i != d) throw ConfigError("charge.atom: expected " + std::to_string(d) +
                                  " coordinates");
    c.atoms.push_back({p, r.num("charge.atom_mass", 1.0)});
  }
  return c;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kMcTimestep: return "mc_timestep";
    case Method::kMcWos: return "mc_wos";
    case Method::kQuadrature: return "quadrature";
    case Method::kHybrid: return "hybrid";
  }
  return "unknown";
}

json estimate_json(const Estimate& e) {
  json j;
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["n"] = e.n;
  j["method"] = method_name(e.method);
  json flags = json::array();
  if (e.flags & kFlagNearBoundarySingularity) flags.push_back("near_boundary_singularity");
  if (e.flags & kFlagInfiniteIntegral) flags.push_back("infinite_integral");
  if (e.flags & kFlagProfileOnly) flags.push_back("profile_only");
  j["flags"] = flags;
  return j;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << content;
}

struct Emitter {
  std::filesystem::path dir;
  json manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void finish() {
    auto dt = std::chrono::duration<double>(
                  std::chrono::steady_clock::now() - t0).count();
    manifest["wall_time_seconds"] = dt;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  }
};

int cmd_simulate(Resolver& r, const ProcessModel& model, const Domain& domain,
                 Emitter& em) {
  long n_paths = r.integer("n_paths", 10000);
  uint64_t seed = static_cast<uint64_t>(r.integer("seed", 1));
  int workers = static_cast<int>(r.integer("workers", 0));
  std::string method = r.str("method", "wos");
  double dt = r.num("dt", 1e-3);
  Pt x = point_from(r, "at", "0 0 0", model.d);
  if (!domain.contains(x)) throw ConfigError("'at' must lie in the domain");

  HarmonicMeasureParams hp;
  hp.method = method == "wos" ? ExitMethod::kWos : ExitMethod::kTimestep;
  hp.dt = dt;
  hp.workers = workers;
  auto make = [&](long i) {
    Rng rng(seed, stream_id(1, static_cast<uint64_t>(i)));
    if (hp.method == ExitMethod::kWos)
      return exit_sample_wos(model, domain, x, hp.wos, rng);
    TimestepParams tp;
    tp.dt = dt;
    tp.escape_radius = domain.bounded()
                           ? std::numeric_limits<double>::infinity()
                           : 100.0 * std::max(1.0, domain.core_radius());
    return exit_sample_timestep(model, domain, x, tp, rng);
  };
  auto records = run_paths(n_paths, workers, make);

  std::ostringstream csv;
  csv << "path_id";
  for (int i = 0; i < model.d; ++i) csv << ",x" << (i + 1);
  csv << ",exit_time,steps\n";
  long escaped = 0;
  for (long i = 0; i < n_paths; ++i) {
    const auto& rec = records[static_cast<size_t>(i)];
    if (rec.escaped_to_infinity) ++escaped;
    csv << i;
    for (int k = 0; k < model.d; ++k) csv << "," << fmt(rec.exit_position[k]);
    csv << "," << (rec.time_tracked ? fmt(rec.exit_time) : "nan");
    csv << "," << rec.steps << "\n";
  }
  write_file(em.dir / "exits.csv", csv.str());
  em.manifest["escaped_fraction"] = static_cast<double>(escaped) / n_paths;
  return 0;
}

int cmd_estimate(Resolver& r, const ProcessModel& model, const Domain& domain,
                 Emitter& em) {
  std::string quantity = r.str("quantity", "green");
  EstimatorOptions eo;
  eo.n_paths = r.integer("n_paths", 10000);
  eo.seed = static_cast<uint64_t>(r.integer("seed", 1));
  eo.workers = static_cast<int>(r.integer("workers", 0));
  eo.method = r.str("method", "wos") == "wos" ? ExitMethod::kWos
                                              : ExitMethod::kTimestep;
  eo.dt = r.num("dt", 1e-3);
  Pt x = point_from(r, "at", "0 0 0", model.d);

  Estimate e;
  if (quantity == "green") {
    e = green_potential(model, domain, [](const Pt&) { return 1.0; }, x, eo);
  } else if (quantity == "poisson-kernel") {
    Pt y = point_from(r, "y", "2 0 0", model.d);
    e = poisson_kernel_est(model, domain, x, y, eo);
  } else if (quantity == "poisson-integral") {
    OuterCharge c = charge_from(r, model.d);
    if (c.empty()) throw ConfigError("poisson-integral needs a charge");
    e = poisson_integral(model, domain, c, x, eo);
  } else if (quantity == "exit-time") {
    auto levels = r.numbers("dt_levels", "1e-2 1e-3 1e-4");
    auto fit = expected_exit_time_mc(model, domain, x, levels, eo.n_paths,
                                     eo.seed, eo.workers);
    e = fit.extrapolated;
    em.manifest["observed_order"] = fit.observed_order;
    em.manifest["fit_ok"] = fit.fit_ok;
  } else if (quantity == "L-apply") {
    OuterCharge c = charge_from(r, model.d);
    Pt bc{};
    double br = 0.0;
    if (!domain.as_ball(bc, br) || norm(bc, model.d) > 0.0 || !c.density)
      throw ConfigError(
          "L-apply tabulates the Poisson integral: needs an origin-centered "
          "ball domain and a density charge");
    BallPoissonRadial tab = BallPoissonRadial::build(
        model.spec.alpha(), model.d, br, *c.density);
    auto u = [&](const Pt& p) {
      double t = norm(p, model.d);
      return t < br ? tab(t) : c.density_at(p, model.d);
    };
    double rho = r.num("inner_radius", 0.25 * domain.dist_to_complement(x));
    LQuadOptions lo;
    lo.truncation_radius = std::max(4.0 * c.support_radius(), 8.0 * br);
    auto res = operator_L_apply(model, u, x, rho, lo);
    e.value = res.value;
    e.std_error = 0.0;
    e.method = Method::kQuadrature;
    em.manifest["tail_bound"] = res.tail_bound;
  } else {
    throw ConfigError("unknown quantity '" + quantity + "'");
  }
  em.manifest["estimate"] = estimate_json(e);
  write_file(em.dir / "estimate.json", estimate_json(e).dump(2) + "\n");
  return 0;
}

int cmd_martin(Resolver& r, const ProcessModel& model, const Domain& domain,
               Emitter& em) {
  std::string mode = r.str("mode", "kernel");
  MartinOptions mo;
  mo.n_paths = r.integer("n_paths", 20000);
  mo.seed = static_cast<uint64_t>(r.integer("seed", 1));
  mo.workers = static_cast<int>(r.integer("workers", 0));

  Pt x0 = r.str("x0", "").empty() ? deep_point(domain)
                                  : point_from(r, "x0", "0 0 0", model.d);

  std::string zs = r.str("z", "1 0");
  BoundaryPoint z;
  if (zs == "inf") {
    z.at_infinity = true;
  } else {
    std::istringstream is(zs);
    int i = 0;
    double v;
    while (is >> v && i < model.d) z.p[i++] = v;
    if (i != model.d) throw ConfigError("z: expected coordinates or 'inf'");
  }

  double scale_len = domain.bounded() ? domain.bounding_radius() : 1.0;
  if (mode == "classify") {
    std::vector<double> schedule;
    if (z.at_infinity)
      for (int k = 0; k < 4; ++k) schedule.push_back(4.0 * scale_len * (1 << k));
    else
      for (int k = 0; k < 5; ++k) schedule.push_back(0.2 * scale_len / (1 << k));
    auto verdict = classify_accessible(model, domain, z, x0, schedule, mo);
    json j;
    j["verdict"] = verdict.verdict == Verdict::kAccessible ? "accessible"
                   : verdict.verdict == Verdict::kInaccessible
                       ? "inaccessible"
                       : "inconclusive";
    j["fitted_slope"] = verdict.fitted_slope;
    j["r_squared"] = verdict.r_squared;
    j["note"] = verdict.note;
    if (verdict.escape_probability >= 0.0) {
      j["escape_probability"] = verdict.escape_probability;
      j["escape_std_error"] = verdict.escape_std_error;
    }
    json ev = json::array();
    for (auto& [a, b] : verdict.evidence) ev.push_back({a, b});
    j["evidence"] = ev;
    write_file(em.dir / "verdict.json", j.dump(2) + "\n");
    em.manifest["verdict"] = j["verdict"];
    return 0;
  }
  if (mode == "kernel") {
    Pt x = point_from(r, "at", "0 0 0", model.d);
    std::vector<double> approach;
    for (int k = 0; k < 5; ++k) approach.push_back(0.08 * scale_len / (1 << k));
    Estimate e = martin_kernel(model, domain, x, z, x0, approach, mo);
    write_file(em.dir / "kernel.json", estimate_json(e).dump(2) + "\n");
    em.manifest["estimate"] = estimate_json(e);
    return 0;
  }
  if (mode == "trace") {
    int stages = static_cast<int>(r.integer("stages", 6));
    int nbins = static_cast<int>(r.integer("bins", 16));
    std::string trace_u = r.str("trace_u", "constant");
    std::function<double(const Pt&)> u = [](const Pt&) { return 1.0; };
    BallPoissonRadial tab;
    if (trace_u == "poisson") {
      OuterCharge c = charge_from(r, model.d);
      Pt bc{};
      double br = 0.0;
      if (!domain.as_ball(bc, br) || !c.density)
        throw ConfigError("trace_u=poisson needs a ball domain and a density");
      tab = BallPoissonRadial::build(model.spec.alpha(), model.d, br,
                                     *c.density);
      u = [&tab](const Pt& p) { return tab.at(p); };
    }
    Rng rng(mo.seed, stream_id(83, 0));
    BoundaryBins bins = make_boundary_bins(domain, nbins, rng);
    Exhaustion ex = default_exhaustion(domain, stages);
    TraceOptions to;
    to.seed = mo.seed;
    to.workers = mo.workers;
    TraceEstimate tr = boundary_trace(model, domain, u, ex, x0, bins, to);
    std::ostringstream csv;
    csv << "stage,bin_id,mass\n";
    for (const auto& st : tr.stages) {
      csv << st.stage << ",interior," << fmt(st.interior_mass) << "\n";
      for (size_t b = 0; b < st.bin_masses.size(); ++b)
        csv << st.stage << "," << b << "," << fmt(st.bin_masses[b]) << "\n";
    }
    write_file(em.dir / "trace.csv", csv.str());
    em.manifest["converged"] = tr.converged;
    return 0;
  }
  throw ConfigError("mode must be kernel, classify or trace");
}

json ro_json(const ROReport& rep) {
  json j;
  j["eta_target"] = rep.eta_target;
  j["uniform_pass"] = rep.uniform_pass;
  j["passing_index"] = rep.passing_index;
  j["delta_grid"] = rep.delta_grid;
  j["sup_ro"] = rep.sup_ro;
  return j;
}

std::string ro_csv(const ROReport& rep) {
  std::ostringstream csv;
  csv << "delta,sup_ro,resolution,argmax_config\n";
  for (size_t i = 0; i < rep.delta_grid.size(); ++i)
    csv << fmt(rep.delta_grid[i]) << "," << fmt(rep.sup_ro[i]) << ","
        << fmt(rep.resolution[i]) << "," << rep.argmax_config[i] << "\n";
  return csv.str();
}

int cmd_verify(Resolver& r, const ProcessModel& model, Emitter& em) {
  std::string suite = r.str("suite", "all");
  VerifyOptions vo;
  vo.seed = static_cast<uint64_t>(r.integer("seed", 20240801));
  vo.workers = static_cast<int>(r.integer("workers", 0));
  vo.alpha = model.spec.kind() == BernsteinKind::kStable ? model.spec.alpha()
                                                         : 1.0;
  vo.d = model.d;
  vo.scale = r.num("mc_scale", 1.0);

  json summary = json::array();
  bool all_pass = true;
  auto note = [&](const std::string& name, bool pass, const json& worst) {
    json j;
    j["suite"] = name;
    j["pass"] = pass;
    j["worst_case"] = worst;
    j["seeds"] = vo.seed;
    summary.push_back(j);
    all_pass = all_pass && pass;
  };

  bool want_all = suite == "all";
  if (want_all || suite == "mean-value") {
    auto rep = mean_value_suite(vo);
    double worst = 0.0;
    std::ostringstream csv;
    csv << "label,x1,x2,residual,combined_se,pass\n";
    for (const auto& c : rep.cases) {
      worst = std::max(worst, std::abs(c.residual) /
                                  std::max(4.0 * c.combined_se + 1e-4, 1e-12));
      csv << c.label << "," << fmt(c.x[0]) << "," << fmt(c.x[1]) << ","
          << fmt(c.residual) << "," << fmt(c.combined_se) << ","
          << (c.pass ? 1 : 0) << "\n";
    }
    write_file(em.dir / "mean_value.csv", csv.str());
    note("mean-value", rep.pass, worst);
  }
  if (want_all || suite == "bhp") {
    auto rep = check_bhp(vo);
    std::ostringstream csv;
    csv << "config,domain_idx,cross_ratio,std_error\n";
    for (size_t i = 0; i < rep.rows.size(); ++i)
      csv << i << "," << rep.rows[i].domain_idx << ","
          << fmt(rep.rows[i].cross_ratio) << "," << fmt(rep.rows[i].std_error)
          << "\n";
    write_file(em.dir / "bhp.csv", csv.str());
    json worst;
    worst["max_ratio"] = rep.max_ratio;
    worst["doubling_ratio"] = rep.doubling_ratio;
    note("bhp", rep.pass, worst);
  }
  if (want_all || suite == "oscillation") {
    auto rep = oscillation_sweep(vo);
    write_file(em.dir / "oscillation.csv", ro_csv(rep));
    note("oscillation", rep.uniform_pass, ro_json(rep));
  }
  if (want_all || suite == "martin-oscillation") {
    auto rep = martin_oscillation_sweep(vo);
    write_file(em.dir / "martin_oscillation.csv", ro_csv(rep));
    note("martin-oscillation", rep.uniform_pass, ro_json(rep));
  }
  if (want_all || suite == "roundtrip") {
    auto rep = representation_roundtrip(vo);
    std::ostringstream csv;
    csv << "quantity,value\n";
    csv << "input_mass," << fmt(rep.input_mass) << "\n";
    csv << "recovered_mass," << fmt(rep.recovered_mass.value) << "\n";
    csv << "recovered_se," << fmt(rep.recovered_mass.std_error) << "\n";
    csv << "normalization," << fmt(rep.normalization.value) << "\n";
    csv << "trace_total," << fmt(rep.trace_total) << "\n";
    csv << "trace_share_at_z," << fmt(rep.trace_share_at_z) << "\n";
    write_file(em.dir / "roundtrip.csv", csv.str());
    json worst;
    worst["recovered_mass"] = rep.recovered_mass.value;
    worst["trace_share_at_z"] = rep.trace_share_at_z;
    note("roundtrip", rep.pass, worst);
  }
  if (want_all || suite == "trace-vanishing") {
    auto rep = trace_vanishing_suite(vo);
    std::ostringstream csv;
    csv << "stage,mass_constant,mass_poisson\n";
    for (size_t i = 0; i < rep.masses_constant.size(); ++i)
      csv << i << "," << fmt(rep.masses_constant[i]) << ","
          << fmt(rep.masses_poisson[i]) << "\n";
    write_file(em.dir / "trace_vanishing.csv", csv.str());
    json worst;
    if (!rep.masses_constant.empty())
      worst["stage5_over_stage1"] =
          rep.masses_constant[4] / rep.masses_constant[0];
    note("trace-vanishing", rep.pass, worst);
  }

  em.manifest["summary"] = summary;
  write_file(em.dir / "summary.json", summary.dump(2) + "\n");
  return all_pass ? 0 : 1;
}

int cmd_audit(Resolver& r, const ProcessModel& model, Emitter& em) {
  std::vector<double> lgrid, rgrid_h1, rgrid_h2;
  for (int i = 0; i <= 12; ++i) lgrid.push_back(std::pow(10.0, 0.5 * i / 2.0));
  for (int i = 0; i <= 12; ++i) rgrid_h1.push_back(std::pow(10.0, 0.5 * i));
  for (int i = -12; i <= 12; ++i) rgrid_h2.push_back(std::pow(10.0, 0.5 * i));

  auto h1 = check_scaling(model.spec, lgrid, rgrid_h1, false);
  auto h2 = check_scaling(model.spec, lgrid, rgrid_h2, true);

  json j;
  auto scaling_json = [](const ScalingReport& s) {
    json x;
    x["satisfied_lsc"] = s.satisfied_lsc;
    x["satisfied_usc"] = s.satisfied_usc;
    x["delta1"] = s.delta1;
    x["delta2"] = s.delta2;
    x["a1"] = s.a1;
    x["a2"] = s.a2;
    x["worst_violation"] = s.worst_violation;
    x["grid_size"] = s.grid.size();
    return x;
  };
  j["h1"] = scaling_json(h1);
  j["h2"] = scaling_json(h2);
  j["transient"] = model.transient;

  double eps = r.num("audit.eps", 0.25);
  auto inner =
      comparability_radius(model, 1.0, eps, 1.0, ComparabilityDirection::kInner);
  j["comparability_inner"] = {{"found", inner.found}, {"p", inner.p}};
  auto outer =
      comparability_radius(model, 1.0, eps, 2.0, ComparabilityDirection::kOuter);
  j["comparability_outer"] = {{"found", outer.found},
                              {"p", outer.found ? outer.p : 0.0}};
  j["assumption_e_certified"] = outer.found;

  write_file(em.dir / "audit.json", j.dump(2) + "\n");
  em.manifest["audit"] = j;
  bool ok = h1.satisfied_lsc && h1.satisfied_usc && model.transient;
  return ok ? 0 : 1;
}

}  // namespace

KeyValues parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = line;
    size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = unquote(trim(s.substr(eq + 1)));
    if (key.empty() || std::count(key.begin(), key.end(), '.') > 1)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": bad key '" + key + "' (one nesting level)");
    kv[key] = value;
  }
  return kv;
}

int run_command(const KeyValues& kv) {
  Resolver r{kv, {}};
  std::string command = r.str("command", "");
  if (command.empty())
    throw ConfigError("no command given (simulate|estimate|martin|verify|audit)");

  BernsteinSpec spec = spec_from(r);
  int d = static_cast<int>(r.integer("process.d", 2));
  ProcessModel model = make_model(spec, d);

  std::string default_dir = "out";
  if (const char* env = std::getenv("SBMPOT_OUTPUT_DIR")) default_dir = env;
  std::string out_dir = r.str("output_dir", default_dir);

  Domain domain;
  bool needs_domain = command != "audit" && command != "verify";
  std::string literal = r.str("domain", needs_domain ? "ball(0 0; 1)" : "");
  if (needs_domain) {
    if (static_cast<int>(std::count(literal.begin(), literal.end(), ';')) >= 0)
      domain = Domain::parse(literal, d);
  }

  Emitter em;
  em.dir = out_dir;
  std::filesystem::create_directories(em.dir);
  em.manifest["tool_version"] = kToolVersion;
  em.manifest["format_version"] = kFormatVersion;

  int code = 0;
  if (command == "simulate")
    code = cmd_simulate(r, model, domain, em);
  else if (command == "estimate")
    code = cmd_estimate(r, model, domain, em);
  else if (command == "martin")
    code = cmd_martin(r, model, domain, em);
  else if (command == "verify")
    code = cmd_verify(r, model, em);
  else if (command == "audit")
    code = cmd_audit(r, model, em);
  else
    throw ConfigError("unknown command '" + command + "'");

  em.manifest["config"] = json(r.resolved);
  em.finish();
  return code;
}

}  // namespace sbm
