#include "coclab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "coclab/error.hpp"
#include "coclab/expression.hpp"
#include "coclab/holonomy.hpp"
#include "coclab/lyapunov.hpp"
#include "coclab/parallel.hpp"
#include "coclab/random.hpp"
#include "coclab/reduction.hpp"
#include "coclab/subadditive.hpp"

namespace coclab {

namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigParse, what); }

int square_side(std::size_t n, const std::string& key) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (n == 0 || static_cast<std::size_t>(side * side) != n)
    config_error("key " + key + " needs a square number of entries, got " + std::to_string(n));
  return side;
}

Lattice lattice_of(const ExperimentConfig& cfg, int dim) {
  if (cfg.lattice.empty()) return Lattice::standard(dim);
  if (static_cast<int>(cfg.lattice.size()) != dim)
    config_error("key base.lattice needs " + std::to_string(dim) + " periods");
  Lattice l;
  for (auto p : cfg.lattice) l.periods.push_back(static_cast<int>(p));
  return l;
}

json vec_json(const BaseVec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json rational_json(const RationalPoint& p) {
  json out = json::array();
  for (auto n : p.num) out.push_back(std::to_string(n) + "/" + std::to_string(p.den));
  return out;
}

TorusPoint random_point(const Lattice& lat, Rng& rng) {
  BaseVec c(lat.dim());
  for (int i = 0; i < lat.dim(); ++i) c(i) = rng.uniform() * lat.periods[i];
  return TorusPoint::from_coords(lat, c);
}

double example_oracle(double eps) { return std::log((1 + std::sqrt(1 - eps * eps)) / 2); }

// Collects outputs of one command.
struct Context {
  const ExperimentConfig& cfg;
  std::string out_dir;
  json results = json::object();
  std::vector<std::string> files;
  bool pass = true;
  json reason = nullptr;

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    if (out_dir.empty()) return;
    std::ofstream f(std::filesystem::path(out_dir) / name);
    f.imbue(std::locale::classic());
    body(f);
    files.push_back(name);
  }
  void fail(const std::string& code, const std::string& message) {
    pass = false;
    if (reason.is_null()) reason = {{"code", code}, {"message", message}};
  }
};

std::vector<TorusPoint> run_grid(const ExperimentConfig& cfg, const Lattice& lat) {
  if (cfg.grid < 1) config_error("key run.grid must be positive");
  return uniform_grid(lat, cfg.grid);
}

PairOptions pair_options(const ExperimentConfig& cfg) {
  PairOptions opt;
  opt.max_steps = cfg.pair_max_steps;
  return opt;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_exponents(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  const Lattice& lat = c.base().lattice();
  Rng rng(cfg.seed);
  std::vector<TorusPoint> starts;
  for (int s = 0; s < cfg.samples; ++s) starts.push_back(random_point(lat, rng));
  std::vector<SpectrumEstimate> est(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { est[i] = full_spectrum(c, starts[i], cfg.orbit_length); });

  json samples = json::array();
  double top = 0, bottom = 0, spread = 0;
  for (const auto& e : est) {
    samples.push_back({{"x0", vec_json(e.x0.coords())}, {"exponents", e.exponents}});
    top += e.exponents.front() / est.size();
    bottom += e.exponents.back() / est.size();
    spread = std::max(spread, e.exponents.front() - e.exponents.back());
  }
  ctx.results["orbit_length"] = cfg.orbit_length;
  ctx.results["lambda_plus"] = top;
  ctx.results["lambda_minus"] = bottom;
  ctx.results["max_top_minus_bottom"] = spread;
  ctx.results["samples"] = samples;
  if (!est.empty())
    ctx.write("exponents_history.csv", [&](std::ostream& o) { write_history_csv(o, est.front().convergence_history); });
}

void cmd_periodic_exponents(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  const auto& f = c.base();
  struct Row {
    int period;
    RationalPoint p;
    std::vector<double> ex;
  };
  std::vector<Row> rows;
  std::int64_t used = 0;
  int included = 0;
  for (int n = 1; n <= cfg.max_period; ++n) {
    const std::int64_t count = periodic_point_count(f, n);
    if (used + count > cfg.periodic_cap) break;
    for (auto& p : periodic_points(f, n, cfg.periodic_cap)) rows.push_back({n, std::move(p), {}});
    used += count;
    included = n;
  }
  parallel_for(rows.size(), [&](std::size_t i) { rows[i].ex = periodic_exponents(c, rows[i].p, rows[i].period); });
  const auto report = one_exponent_test(c, included, cfg.tol, cfg.periodic_cap);

  ctx.results["periods_included"] = included;
  ctx.results["points"] = rows.size();
  for (const auto& r : rows) {
    if (r.period == 1 && std::all_of(r.p.num.begin(), r.p.num.end(), [](auto v) { return v == 0; })) {
      ctx.results["fixed_point_exponents"] = r.ex;
      break;
    }
  }
  ctx.results["one_exponent"] = {{"pass", report.pass},
                                 {"gap", report.gap},
                                 {"tolerance", cfg.tol},
                                 {"worst", rational_json(report.worst)},
                                 {"worst_period", report.worst_period}};
  ctx.write("periodic_exponents.csv", [&](std::ostream& o) {
    o << "period,point";
    for (int k = 0; k < c.fiber_dim(); ++k) o << ",exponent" << k + 1;
    o << "\n";
    o.precision(17);
    for (const auto& r : rows) {
      o << r.period << ",";
      for (std::size_t i = 0; i < r.p.num.size(); ++i) o << (i ? " " : "") << r.p.num[i] << "/" << r.p.den;
      for (double e : r.ex) o << "," << e;
      o << "\n";
    }
  });
}

void cmd_distortion(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  const auto grid = default_grid(c.base(), cfg.grid, cfg.max_period, cfg.periodic_cap);
  const auto cert = distortion_growth_certificate(c, cfg.xi, cfg.eps, grid.points, cfg.n_max);
  ctx.results["grid_points"] = grid.points.size();
  ctx.results["periods_included"] = grid.periods_included;
  ctx.results["n_max"] = cfg.n_max;
  ctx.results["rate"] = cert.rate;
  ctx.results["max_log_k"] = cert.max_log_k.back();
  ctx.results["worst"] = vec_json(cert.worst.coords());
  ctx.write("distortion.csv", [&](std::ostream& o) {
    o << "n,max_log_k\n";
    o.precision(17);
    for (std::size_t n = 0; n < cert.max_log_k.size(); ++n) o << n << "," << cert.max_log_k[n] << "\n";
  });
}

void cmd_holonomy_check(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  const HolonomySolver h(c);
  const auto triples = random_stable_triples(c.base(), cfg.triples, cfg.leaf_distance, cfg.seed);
  const auto report = h.verify_axioms(triples);
  const double theta = h.theta(LeafType::Stable);
  std::vector<double> slopes(triples.size(), std::nan(""));
  parallel_for(triples.size(), [&](std::size_t i) { slopes[i] = increment_decay_slope(h.stable(triples[i].x, triples[i].y)); });
  double worst_slope = -std::numeric_limits<double>::infinity();
  for (double s : slopes)
    if (std::isfinite(s)) worst_slope = std::max(worst_slope, s);
  const double slope_bound = std::log(theta) + 0.05;

  ctx.results["triples"] = report.triples;
  ctx.results["tolerance"] = cfg.tol;
  ctx.results["composition_defect"] = report.composition_defect;
  ctx.results["equivariance_defect"] = report.equivariance_defect;
  ctx.results["holder_constant"] = report.holder_constant;
  ctx.results["uniqueness_defect"] = report.uniqueness_defect;
  ctx.results["theta_stable"] = theta;
  ctx.results["theta_unstable"] = h.theta(LeafType::Unstable);
  ctx.results["decay_slope"] = std::isfinite(worst_slope) ? json(worst_slope) : json(nullptr);
  ctx.results["decay_slope_bound"] = slope_bound;
  if (!report.passed(cfg.tol)) ctx.fail("ToleranceUnreachable", "holonomy axiom defects above tolerance");
  if (std::isfinite(worst_slope) && worst_slope > slope_bound)
    ctx.fail("ToleranceUnreachable", "increment decay slower than the bunching rate");
}

void cmd_invariant_pairs(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  if (cfg.grid < 1) config_error("key run.grid must be positive");
  const auto grid = uniform_grid(c.base().lattice(), cfg.grid, kGenericOffset);
  const auto opt = pair_options(cfg);
  const auto field = line_pair_scan(c, grid, cfg.tol, opt);
  ctx.results["grid_points"] = grid.size();
  ctx.results["tolerance"] = cfg.tol;
  ctx.results["residual"] = field.residual;
  ctx.results["failures"] = field.failures;
  ctx.write("invariant_pairs.csv", [&](std::ostream& o) { write_pair_csv(o, field); });
  if (!field.ok) {
    ctx.fail("NoInvariantPair", std::to_string(field.failures) + " failures, residual " + std::to_string(field.residual));
    return;
  }
  json mono = json::object();
  for (int axis = 0; axis < c.base().dim(); ++axis) {
    const auto m = pair_monodromy(c, grid.front(), axis, cfg.monodromy_steps, opt);
    mono["x" + std::to_string(axis + 1)] = {
        {"swapped", m.swapped}, {"max_jump", m.max_jump}, {"min_separation", m.min_separation}};
  }
  ctx.results["monodromy"] = mono;
}

void cmd_invariant_structure(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  StructureOptions opt;
  opt.window = cfg.window;
  opt.distortion_cap = cfg.distortion_cap;
  opt.tol = cfg.tol;
  opt.barycenter = cfg.barycenter == "karcher" ? Barycenter::KarcherMean : Barycenter::EnclosingBall;
  const auto field =
      invariant_conformal_structure(c, ConformalStructure::identity(c.fiber_dim()), run_grid(cfg, c.base().lattice()), opt);
  ctx.results["grid_points"] = field.grid.size();
  ctx.results["tolerance"] = cfg.tol;
  ctx.results["max_defect"] = field.max_defect;
  ctx.results["max_distortion"] = field.max_distortion;
  ctx.write("invariant_structure.csv", [&](std::ostream& o) {
    const int d = c.fiber_dim();
    for (int i = 0; i < c.base().dim(); ++i) o << "x" << i + 1 << ",";
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) o << "c" << a + 1 << b + 1 << ",";
    o << "defect\n";
    o.precision(17);
    for (std::size_t k = 0; k < field.grid.size(); ++k) {
      for (int i = 0; i < c.base().dim(); ++i) o << field.grid[k].coord(i) << ",";
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) o << field.structures[k].matrix()(a, b) << ",";
      o << field.defects[k] << "\n";
    }
  });
}

void cmd_subadd_cert(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  const auto grid = default_grid(c.base(), cfg.grid, cfg.max_period, cfg.periodic_cap);
  const auto cert = distortion_growth_certificate(c, cfg.xi, cfg.eps, grid.points, cfg.n_max);
  const auto fam = log_distortion_family(c, cfg.level_rate, cfg.level_max);
  const auto scan = negative_level_scan(fam, grid.points, cfg.level_max);

  ctx.results["grid_points"] = grid.points.size();
  ctx.results["periods_included"] = grid.periods_included;
  ctx.results["xi"] = cfg.xi;
  ctx.results["eps"] = cfg.eps;
  ctx.results["c_eps"] = cert.c_eps;
  ctx.results["log_c_eps"] = cert.log_c_eps;
  ctx.results["c_eps_half"] = cert.c_eps_half;
  ctx.results["certificate_pass"] = cert.pass;
  ctx.results["rate"] = cert.rate;
  ctx.results["worst"] = vec_json(cert.worst.coords());
  ctx.results["level_rate"] = cfg.level_rate;
  ctx.results["level_found"] = scan.found;
  ctx.results["level"] = scan.found ? json(scan.level) : json(nullptr);
  ctx.write("subadd_levels.csv", [&](std::ostream& o) { write_level_csv(o, scan.max_by_level); });
  if (!cert.pass)
    ctx.fail("CertificateGrowth", "C_eps grew by more than 1% when n_max doubled; rate " + std::to_string(cert.rate));
}

void cmd_growth_fit(Context& ctx, const CocycleSpec& c) {
  const auto& cfg = ctx.cfg;
  if (cfg.n_lo < 0 || cfg.n_hi <= cfg.n_lo || cfg.n_hi > 24) config_error("keys run.n_lo/run.n_hi must satisfy 0 <= n_lo < n_hi <= 24");
  const auto fit = polynomial_growth_fit(c, run_grid(cfg, c.base().lattice()), geometric_n_list(cfg.n_lo, cfg.n_hi));
  const double bound = c.fiber_dim() - 1 + 0.1;
  ctx.results["norm_slope"] = fit.norm_slope;
  ctx.results["distortion_slope"] = fit.distortion_slope;
  ctx.results["slope_bound"] = bound;
  ctx.write("growth_fit.csv", [&](std::ostream& o) {
    o << "n,max_log_norm,max_log_k\n";
    o.precision(17);
    for (std::size_t i = 0; i < fit.n.size(); ++i) o << fit.n[i] << "," << fit.max_log_norm[i] << "," << fit.max_log_k[i] << "\n";
  });
  if (!(fit.norm_slope <= bound)) ctx.fail("GrowthTooFast", "norm slope exceeds fiber dimension − 1");
}

void cmd_example46(Context& ctx, const ExperimentConfig& cfg) {
  const auto ex = example46(build_base(cfg), cfg.epsilon);
  json& r = ctx.results;
  r["epsilon"] = cfg.epsilon;

  // Exact exponents at the fixed point 0.
  RationalPoint origin;
  origin.num.assign(2, 0);
  const auto fixed = periodic_exponents(ex.torus, origin, 1);
  const std::vector<double> expected{std::log1p(cfg.epsilon), std::log1p(-cfg.epsilon)};
  r["fixed_point_exponents"] = fixed;
  r["fixed_point_expected"] = expected;
  const double fixed_error = std::max(std::abs(fixed[0] - expected[0]), std::abs(fixed[1] - expected[1]));
  r["fixed_point_error"] = fixed_error;
  if (!(fixed_error < 1e-12)) ctx.fail("FixedPointMismatch", "fixed-point exponents differ from log(1 ± ε)");

  // Volume-typical exponents agree.
  Rng rng(cfg.seed);
  std::vector<TorusPoint> starts;
  for (int s = 0; s < cfg.samples; ++s) starts.push_back(random_point(ex.torus.base().lattice(), rng));
  std::vector<ExponentPair> pairs(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { pairs[i] = top_bottom_exponents(ex.torus, starts[i], cfg.orbit_length); });
  const double oracle = example_oracle(cfg.epsilon);
  double worst_oracle = 0, worst_gap = 0;
  json tops = json::array(), bottoms = json::array();
  for (const auto& p : pairs) {
    tops.push_back(p.top);
    bottoms.push_back(p.bottom);
    worst_oracle = std::max({worst_oracle, std::abs(p.top - oracle), std::abs(p.bottom - oracle)});
    worst_gap = std::max(worst_gap, p.top - p.bottom);
  }
  r["typical"] = {{"orbit_length", cfg.orbit_length}, {"oracle", oracle},       {"lambda_plus", tops},
                  {"lambda_minus", bottoms},          {"max_oracle_error", worst_oracle}, {"max_gap", worst_gap},
                  {"tolerance", 5e-3}};
  if (!(worst_oracle < 5e-3 && worst_gap < 5e-3)) ctx.fail("ExponentsSplit", "typical exponents differ");

  // Periodic data see two exponents.
  const auto one = one_exponent_test(ex.torus, 2, cfg.tol, cfg.periodic_cap);
  r["one_exponent"] = {{"pass", one.pass}, {"gap", one.gap}, {"worst", rational_json(one.worst)}};
  if (one.pass) ctx.fail("UnexpectedOneExponent", "periodic data show a single exponent");

  // Invariant pair field against C̄(x)·axes, and its monodromy.
  const auto grid = uniform_grid(Lattice::standard(2), cfg.grid, kGenericOffset);
  const auto opt = pair_options(cfg);
  const auto field = line_pair_scan(ex.torus, grid, cfg.tol, opt);
  double pair_error = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = kPi * grid[i].coord(0) / 2;
    pair_error = std::max(pair_error, pair_distance(field.pairs[i], make_pair_of_lines(t, t + kPi / 2)));
  }
  if (field.failures > 0) pair_error = std::numeric_limits<double>::infinity();
  const auto m1 = pair_monodromy(ex.torus, grid.front(), 0, cfg.monodromy_steps, opt);
  const auto m2 = pair_monodromy(ex.torus, grid.front(), 1, cfg.monodromy_steps, opt);
  r["pair_field"] = {{"grid_points", grid.size()},        {"failures", field.failures},
                     {"residual", field.residual},         {"max_angle_error", std::isfinite(pair_error) ? json(pair_error) : json(nullptr)},
                     {"swap_around_x1", m1.swapped},       {"swap_around_x2", m2.swapped},
                     {"tolerance", 1e-6}};
  ctx.write("example46_pairs.csv", [&](std::ostream& o) { write_pair_csv(o, field); });
  if (!(pair_error < 1e-6)) ctx.fail("PairFieldMismatch", "pair field differs from C̄(x)·axes");
  if (!m1.swapped || m2.swapped) ctx.fail("MonodromyMismatch", "pair monodromy is not a swap around x1 only");

  // Distortion grows exponentially at the fixed point.
  const auto dgrid = default_grid(ex.torus.base(), cfg.grid, cfg.max_period, cfg.periodic_cap);
  const auto cert = distortion_growth_certificate(ex.torus, 0.0, cfg.eps, dgrid.points, cfg.n_max);
  const double expected_rate = std::log((1 + cfg.epsilon) / (1 - cfg.epsilon));
  r["distortion"] = {{"certificate_pass", cert.pass},
                     {"rate", cert.rate},
                     {"expected_rate", expected_rate},
                     {"worst", vec_json(cert.worst.coords())},
                     {"tolerance", 1e-3}};
  if (cert.pass || !(std::abs(cert.rate - expected_rate) < 1e-3))
    ctx.fail("DistortionMismatch", "distortion growth does not match the fixed-point rate");

  const auto scan = negative_level_scan(log_distortion_family(ex.torus, cfg.level_rate, cfg.level_max), dgrid.points,
                                        cfg.level_max);
  r["negative_level"] = {{"rate", cfg.level_rate}, {"found", scan.found}, {"level", scan.found ? json(scan.level) : json(nullptr)}};
  if (!scan.found && cfg.level_rate > expected_rate) ctx.fail("NotFound", "no negative level below level_max");

  // Flag on the 4-cover: Birkhoff means agree, periodic data do not.
  CoboundaryOptions cob;
  cob.max_period = 2;
  cob.periodic_cap = cfg.periodic_cap;
  cob.tol = cfg.tol;
  const auto line = [&](const BaseVec& x) { return Vec2(ex.cbar(x).col(0)); };
  const auto flag = flag_factor_analysis(ex.cover4, line, uniform_grid(ex.cover4.base().lattice(), 8), cob);
  r["flag"] = {{"obstructed", flag.obstructed},
               {"birkhoff_mean_log_ratio", flag.ratio.birkhoff_mean},
               {"periodic_gap", flag.ratio.periodic_gap},
               {"line_defect", flag.line_defect}};
  if (!flag.obstructed) ctx.fail("UnexpectedCoboundary", "factor scalings look cohomologous");
}

}  // namespace

std::vector<std::string> command_names() {
  return {"exponents",        "periodic-exponents", "distortion",  "holonomy-check", "invariant-pairs",
          "invariant-structure", "subadd-cert",     "growth-fit",  "example46"};
}

ToralAutomorphism build_base(const ExperimentConfig& cfg) {
  if (cfg.base_matrix.empty()) config_error("missing required key base.matrix");
  const int d = square_side(cfg.base_matrix.size(), "base.matrix");
  IntMat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cfg.base_matrix[i * d + j];
  try {
    return make_automorphism(m, lattice_of(cfg, d), cfg.leaf_radius);
  } catch (const Error& e) {
    config_error("key base.matrix: " + std::string(e.what()));
  }
}

CocycleSpec build_cocycle(const ExperimentConfig& cfg) {
  const ToralAutomorphism base = build_base(cfg);
  if (cfg.kind.empty()) config_error("missing required key cocycle.kind");
  try {
    if (cfg.kind == "constant") {
      if (cfg.matrix.empty()) config_error("missing required key cocycle.matrix");
      const int d = square_side(cfg.matrix.size(), "cocycle.matrix");
      Mat a(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = cfg.matrix[i * d + j];
      return constant_cocycle(base, a, cfg.beta);
    }
    if (cfg.kind == "conformal") {
      if (cfg.frame.size() != 4) config_error("key cocycle.frame needs 4 entries");
      ConformalParams p;
      p.scale_amplitude = cfg.scale_amplitude;
      p.rotation_offset = cfg.rotation_offset;
      p.frame << cfg.frame[0], cfg.frame[1], cfg.frame[2], cfg.frame[3];
      return conformal_cocycle(base, p, cfg.beta);
    }
    if (cfg.kind == "expression") {
      if (cfg.entries.empty()) config_error("missing required key cocycle.entries");
      const int d = square_side(cfg.entries.size(), "cocycle.entries");
      std::vector<std::vector<Expression>> rows(d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) rows[i].push_back(Expression::parse(cfg.entries[i * d + j]));
      return expression_cocycle(base, rows, cfg.beta);
    }
    // example46
    auto ex = example46(base, cfg.epsilon);
    if (cfg.lift == "cover4") return ex.cover4;
    if (cfg.lift == "cover2") return ex.cover2;
    return ex.torus;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigParse) throw;
    config_error("section [cocycle]: " + std::string(e.what()));
  }
}

RunRecord run_command(const std::string& command, const ExperimentConfig& cfg, const std::string& out_dir) {
  static const std::map<std::string, std::function<void(Context&, const CocycleSpec&)>> table = {
      {"exponents", cmd_exponents},
      {"periodic-exponents", cmd_periodic_exponents},
      {"distortion", cmd_distortion},
      {"holonomy-check", cmd_holonomy_check},
      {"invariant-pairs", cmd_invariant_pairs},
      {"invariant-structure", cmd_invariant_structure},
      {"subadd-cert", cmd_subadd_cert},
      {"growth-fit", cmd_growth_fit},
  };
  const bool battery = command == "example46";
  if (!battery && !table.count(command)) throw Error(ErrorCode::UnknownCommand, "unknown command '" + command + "'");
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  const auto start = std::chrono::steady_clock::now();
  Context ctx{cfg, out_dir, json::object(), {}, true, nullptr};
  if (battery) {
    if (cfg.base_matrix.empty()) config_error("missing required key base.matrix");
  }
  try {
    if (battery) {
      cmd_example46(ctx, cfg);
    } else {
      const CocycleSpec c = build_cocycle(cfg);
      table.at(command)(ctx, c);
    }
  } catch (const Error& e) {
    if (!is_numeric_failure(e.code())) throw;
    ctx.fail(std::string(to_string(e.code())), e.what());
  }

  RunRecord rec;
  rec.command = command;
  rec.pass = ctx.pass;
  rec.exit_code = ctx.pass ? 0 : 2;
  json cfg_echo = json::object();
  for (const auto& key : config_keys()) {
    const auto dot = key.find('.');
    cfg_echo[key.substr(0, dot)][key.substr(dot + 1)] = get_config_value(cfg, key);
  }
  rec.json["command"] = command;
  rec.json["seed"] = cfg.seed;
  rec.json["pass"] = ctx.pass;
  rec.json["reason"] = ctx.reason;
  rec.json["results"] = std::move(ctx.results);
  rec.json["config"] = std::move(cfg_echo);
  rec.json["config_text"] = serialize_config(cfg);
  ctx.files.push_back(command + ".json");
  rec.json["files"] = ctx.files;
  rec.files = ctx.files;
  rec.json["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out_dir.empty()) {
    std::ofstream f(std::filesystem::path(out_dir) / (command + ".json"));
    f << rec.json.dump(2) << "\n";
  } else {
    rec.files.clear();
    rec.json["files"] = json::array();
  }
  return rec;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return is_numeric_failure(err->code()) ? 2 : 1;
  return 1;
}

}  // namespace coclab
