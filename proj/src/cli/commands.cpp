#include "grasshopper/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "grasshopper/analysis.hpp"
#include "grasshopper/annealer.hpp"
#include "grasshopper/error.hpp"
#include "grasshopper/io.hpp"
#include "grasshopper/kernels.hpp"
#include "grasshopper/spectral.hpp"
#include "grasshopper/triangular_cogs.hpp"

namespace grasshopper {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double pi = std::numbers::pi;
constexpr int kSchema = 1;

double parse_decimal(const std::string& s, const std::string& whole) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::BadFlag, "bad angle token '" + whole + "'");
}

// Records every option as given (or its default) so a run can be replayed.
json resolved_config(const CLI::App& app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    std::string key = opt->get_single_name();
    if (opt->count() > 0) {
      const auto& r = opt->results();
      cfg[key] = r.size() == 1 ? json(r[0]) : json(r);
    } else {
      const std::string d = opt->get_default_str();
      cfg[key] = d.empty() || d == "{}" ? json(nullptr) : json(d);
    }
  }
  return cfg;
}

json envelope(const std::string& command, json config, std::uint64_t seed,
              const std::optional<std::string>& grid_hash, std::optional<double> best) {
  json j;
  j["schema"] = kSchema;
  j["command"] = command;
  j["config"] = std::move(config);
  j["seed"] = seed;
  j["grid_hash"] = grid_hash ? json(*grid_hash) : json(nullptr);
  j["bestP"] = best ? json(*best) : json(nullptr);
  return j;
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json error_json(const Error& e) {
  return {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
}

GridPtr load_grid(const std::string& spec, std::uint64_t seed) {
  return std::make_shared<const SphericalGrid>(make_grid(spec, seed));
}

std::string csv_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", x);
  return buf;
}

struct Context {
  std::string out_dir;
  std::ostream* out = nullptr;
};

// False when --help was handled.
bool parse_args(CLI::App& app, const std::vector<std::string>& args, const Context& ctx) {
  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    *ctx.out << app.help();
    return false;
  }
  return true;
}

void emit(const Context& ctx, const json& result) {
  if (!ctx.out_dir.empty()) write_file_atomic(fs::path(ctx.out_dir) / "result.json", result.dump(2) + "\n");
  *ctx.out << result.dump() << '\n';
}

// Cog and stripe summaries never fail the command; an analysis that does not
// apply to the lawn records its error instead.
json shape_summary(const LawnState& state, double theta) {
  json s;
  try {
    const CogReport c = count_cogs(state, theta);
    s["cogs"] = {{"count", c.cog_count}, {"mode", c.mode}, {"height", c.height},
                 {"height_std", c.height_std}, {"axis", vec_json(c.axis)}};
  } catch (const Error& e) {
    s["cogs"] = {{"error", error_json(e)}};
  }
  try {
    const StripeReport r = count_stripes(state, theta);
    s["stripes"] = {{"count", r.stripe_count}, {"predicted", r.predicted},
                    {"zonal_ratio", r.zonal_ratio}, {"axis", vec_json(r.axis)}};
  } catch (const Error& e) {
    s["stripes"] = {{"error", error_json(e)}};
  }
  return s;
}

std::string history_csv(const PipelineResult& r) {
  std::ostringstream out;
  out << "phase,sweep,temperature,current,best,acceptance\n";
  for (const OptimizationResult* o : {&r.full, &r.boundary, &r.greedy}) {
    if (o == &r.boundary && r.boundary.phase == r.full.phase) continue;  // symmetric runs
    long long i = 0;
    for (const SweepRecord& s : o->history) {
      out << to_string(o->phase) << ',' << i++ << ',' << csv_double(s.temperature) << ','
          << csv_double(s.current) << ',' << csv_double(s.best) << ','
          << csv_double(s.acceptance) << '\n';
    }
  }
  return out.str();
}

// --- grid ------------------------------------------------------------------

int cmd_grid(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Build or load a grid and report its diagnostics", "grid"};
  app.option_defaults()->always_capture_default();
  std::string spec;
  std::uint64_t seed = 1;
  std::string theta_token;
  Context ctx = base;
  app.add_option("--grid", spec, "healpix:<n_side>, goldberg:<f>, coulomb:<pairs> or a file")->required();
  app.add_option("--seed", seed, "seed for generated grids");
  app.add_option("--theta", theta_token, "jump angle for potential energies");
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  const GridPtr g = load_grid(spec, seed);
  json r = envelope("grid", resolved_config(app), seed, g->hash(), std::nullopt);
  r["n"] = g->size();
  r["kind"] = std::string(to_string(g->kind()));
  r["spacing"] = g->spacing();
  r["antipodes"] = g->has_antipodes();
  if (g->has_antipodes()) r["antipode_tolerance"] = g->antipodes().tolerance;
  if (!theta_token.empty()) {
    const double theta = parse_angle(theta_token);
    const PotentialEnergyReport pe = potential_energies(g, theta);
    r["theta"] = theta;
    r["potential_energy"] = {{"mean", pe.mean},         {"variance", pe.variance},
                             {"skewness", pe.skewness}, {"scale", pe.scale},
                             {"scaled_variance", pe.scaled_variance}};
    if (!ctx.out_dir.empty()) {
      std::ostringstream h;
      h << "lo,hi,count\n";
      for (std::size_t b = 0; b < pe.histogram.counts.size(); ++b)
        h << csv_double(pe.histogram.edges[b]) << ',' << csv_double(pe.histogram.edges[b + 1]) << ','
          << pe.histogram.counts[b] << '\n';
      write_file_atomic(fs::path(ctx.out_dir) / "energy_histogram.csv", h.str());
    }
  }
  if (!ctx.out_dir.empty()) write_point_set(*g, fs::path(ctx.out_dir) / "grid.txt");
  emit(ctx, r);
  return 0;
}

// --- anneal / sweep ----------------------------------------------------------

struct AnnealOptions {
  SetupKind setup = SetupKind::AntipodalOneLawn;
  AnnealSchedule schedule;
  int symmetric = 0;
  Vec3 axis{0, 0, 1};
  int ell_max = 63;
  bool analyze = true;
};

json anneal_point(const GridPtr& g, double theta, const AnnealOptions& o, const std::string& dir) {
  const ShellTable shells = build_shell_table(g, theta, is_antipodal(o.setup));
  const LawnState start = new_random_lawn(g, o.setup, o.schedule.seed);
  const auto run = [&]() -> PipelineResult {
    if (o.symmetric == 0) return optimize(start, shells, o.schedule);
    OptimizationResult sym = anneal_symmetric(start, shells, o.schedule, o.symmetric, o.axis);
    OptimizationResult greedy = greedy_descent(sym.best_state, shells, o.schedule.seed + 2);
    return {sym, sym, std::move(greedy)};
  };
  const PipelineResult pipe = run();
  const OptimizationResult& best = pipe.final();
  json r;
  r["theta"] = theta;
  r["setup"] = std::string(to_string(o.setup));
  r["bestP"] = best.best_probability;
  r["stages"] = {{"full", pipe.full.best_probability},
                 {"boundary", pipe.boundary.best_probability},
                 {"greedy", pipe.greedy.best_probability}};
  r["t_initial"] = pipe.full.t_initial;
  r["sweeps"] = pipe.full.history.size() + pipe.boundary.history.size();
  r["hemisphere_reference"] = hemisphere_reference(theta);
  r["upper_bound"] = setup_upper_bound(theta, o.ell_max, o.setup);
  if (o.analyze) r["shape"] = shape_summary(best.best_state, theta);
  if (!dir.empty()) {
    write_lawn(fs::path(dir) / "lawn.txt", best.best_state, theta, g->hash());
    write_file_atomic(fs::path(dir) / "history.csv", history_csv(pipe));
  }
  return r;
}

std::string shape_cell(const json& shape, const char* key) {
  if (!shape.contains(key)) return "";
  const json& s = shape[key];
  if (s.contains("error")) return s["error"]["code"].get<std::string>();
  return std::to_string(s["count"].get<int>());
}

int cmd_anneal(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Optimize a lawn by annealing, boundary refinement and greedy descent", "anneal"};
  app.option_defaults()->always_capture_default();
  std::string spec;
  std::string setup = "antipodal-one";
  std::string theta_token;
  std::string thetas_token;
  std::uint64_t seed = 1;
  std::vector<double> axis;
  AnnealOptions o;
  bool no_analysis = false;
  Context ctx = base;
  app.add_option("--grid", spec, "grid spec")->required();
  app.add_option("--setup", setup, "antipodal-one, antipodal-two or non-antipodal");
  auto* th = app.add_option("--theta", theta_token, "jump angle, e.g. 0.29pi");
  auto* ths = app.add_option("--thetas", thetas_token, "sweep: comma list and/or a:b:count ranges");
  th->excludes(ths);
  app.add_option("--seed", seed, "seed for the start lawn and the chain");
  app.add_option("--t-initial", o.schedule.t_initial, "0 = auto");
  app.add_option("--t-min", o.schedule.t_min, "0 = 1e-4 t_initial");
  app.add_option("--cooling", o.schedule.cooling)->check(CLI::Range(0.0, 1.0));
  app.add_option("--sweeps-per-temperature", o.schedule.sweeps_per_temperature)->check(CLI::PositiveNumber);
  app.add_option("--stall-limit", o.schedule.stall_limit)->check(CLI::PositiveNumber);
  app.add_option("--max-sweeps", o.schedule.max_sweeps, "0 = no cap");
  app.add_option("--symmetric", o.symmetric, "k-fold rotation symmetry (0 = off)");
  app.add_option("--axis", axis, "symmetry axis x,y,z")->expected(3)->delimiter(',');
  app.add_option("--ell-max", o.ell_max, "cutoff for the spectral upper bound")->check(CLI::PositiveNumber);
  app.add_flag("--no-analysis", no_analysis, "skip cog and stripe counting");
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  if (th->count() == 0 && ths->count() == 0)
    fail(ErrorCode::BadFlag, "one of --theta or --thetas is required");
  o.setup = parse_setup(setup);
  o.schedule.seed = seed;
  o.analyze = !no_analysis;
  if (axis.size() == 3) o.axis = normalized(Vec3{axis[0], axis[1], axis[2]});
  const GridPtr g = load_grid(spec, seed);

  if (th->count() > 0) {
    const double theta = parse_angle(theta_token);
    json point = anneal_point(g, theta, o, ctx.out_dir);
    json r = envelope("anneal", resolved_config(app), seed, g->hash(), point["bestP"].get<double>());
    r.update(point);
    if (!ctx.out_dir.empty()) r["lawn_file"] = "lawn.txt";
    emit(ctx, r);
    return 0;
  }

  const std::vector<double> thetas = parse_angle_list(thetas_token);
  for (double t : thetas) check_resolvable(*g, t, is_antipodal(o.setup));
  std::vector<json> points(thetas.size());
  std::vector<std::optional<Error>> errors(thetas.size());
  const long long count = static_cast<long long>(thetas.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(kernels::thread_count())
  for (long long i = 0; i < count; ++i) {
    try {
      std::string dir;
      if (!ctx.out_dir.empty()) dir = (fs::path(ctx.out_dir) / ("point_" + std::to_string(i))).string();
      points[i] = anneal_point(g, thetas[i], o, dir);
      points[i]["dir"] = dir.empty() ? json(nullptr) : json("point_" + std::to_string(i));
    } catch (const Error& e) {
      errors[i] = e;
    } catch (const std::exception& e) {
      errors[i] = Error(ErrorCode::IoError, e.what());
    }
  }
  for (const auto& e : errors)
    if (e) throw *e;

  std::ostringstream csv;
  csv << "theta,theta_over_pi,setup,bestP,hemisphere,upper_bound,cogs,stripes\n";
  double best = 0.0;
  for (const json& p : points) {
    const double t = p["theta"].get<double>();
    best = std::max(best, p["bestP"].get<double>());
    const json shape = p.value("shape", json::object());
    csv << csv_double(t) << ',' << csv_double(t / pi) << ',' << p["setup"].get<std::string>() << ','
        << csv_double(p["bestP"].get<double>()) << ',' << csv_double(p["hemisphere_reference"].get<double>())
        << ',' << csv_double(p["upper_bound"].get<double>()) << ',' << shape_cell(shape, "cogs") << ','
        << shape_cell(shape, "stripes") << '\n';
  }
  if (!ctx.out_dir.empty()) write_file_atomic(fs::path(ctx.out_dir) / "sweep.csv", csv.str());
  json r = envelope("anneal", resolved_config(app), seed, g->hash(), best);
  r["points"] = points;
  if (!ctx.out_dir.empty()) r["sweep_csv"] = "sweep.csv";
  emit(ctx, r);
  return 0;
}

// --- evaluate ----------------------------------------------------------------

struct LoadedLawn {
  GridPtr grid;
  LawnState state;
  double theta;
};

LoadedLawn load_lawn(const std::string& grid_spec, const std::string& lawn_path,
                     const std::string& theta_token, std::uint64_t seed) {
  GridPtr g = load_grid(grid_spec, seed);
  double recorded = 0.0;
  LawnState st = read_lawn(lawn_path, g, &recorded);
  const double theta = theta_token.empty() ? recorded : parse_angle(theta_token);
  return {g, std::move(st), theta};
}

int cmd_evaluate(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Evaluate the success probability of a lawn file", "evaluate"};
  app.option_defaults()->always_capture_default();
  std::string spec, lawn, theta_token;
  std::uint64_t seed = 1;
  std::size_t mc = 0;
  Context ctx = base;
  app.add_option("--grid", spec, "grid spec")->required();
  app.add_option("--lawn", lawn, "lawn file")->required();
  app.add_option("--theta", theta_token, "jump angle (default: the one recorded in the file)");
  app.add_option("--mc-samples", mc, "Monte Carlo oracle samples (0 = skip)");
  app.add_option("--seed", seed, "seed for the oracle and generated grids");
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  const LoadedLawn l = load_lawn(spec, lawn, theta_token, seed);
  const ShellTable shells = build_shell_table(l.grid, l.theta, is_antipodal(l.state.setup()));
  const double p = evaluate_probability(l.state, shells);
  json r = envelope("evaluate", resolved_config(app), seed, l.grid->hash(), p);
  r["theta"] = l.theta;
  r["setup"] = std::string(to_string(l.state.setup()));
  r["probability"] = p;
  r["hemisphere_reference"] = hemisphere_reference(l.theta);
  if (mc > 0) {
    const McEstimate e = mc_oracle_probability(l.state, l.theta, mc, seed);
    r["mc_oracle"] = {{"estimate", e.estimate}, {"std_error", e.std_error}, {"samples", mc}};
  }
  emit(ctx, r);
  return 0;
}

// --- diagnose ----------------------------------------------------------------

int cmd_diagnose(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Grid diagnostics: hemisphere orientation scan or potential energies", "diagnose"};
  app.option_defaults()->always_capture_default();
  std::string kind, spec, thetas_token;
  std::uint64_t seed = 1;
  int orientations = 100;
  Context ctx = base;
  app.add_option("kind", kind, "hemisphere or energies")->required()->check(CLI::IsMember({"hemisphere", "energies"}));
  app.add_option("--grid", spec, "grid spec")->required();
  app.add_option("--thetas", thetas_token, "comma list and/or a:b:count ranges")->required();
  app.add_option("--orientations", orientations, "random axes per angle")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for the random axes");
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  const std::vector<double> thetas = parse_angle_list(thetas_token);
  const GridPtr g = load_grid(spec, seed);
  json r = envelope("diagnose", resolved_config(app), seed, g->hash(), std::nullopt);
  r["kind"] = kind;
  json rows = json::array();
  std::ostringstream csv;
  if (kind == "hemisphere") {
    const bool antipodal = g->has_antipodes();
    csv << "theta,theta_over_pi,mean,std,reference,abs_error\n";
    double worst = 0.0;
    for (double t : thetas) {
      const ShellTable shells = build_shell_table(g, t, antipodal);
      const OrientationStats s = hemisphere_orientation_stats(shells, orientations, seed);
      const double err = std::abs(s.mean - s.reference);
      worst = std::max(worst, err);
      rows.push_back({{"theta", t}, {"mean", s.mean}, {"std", s.std}, {"reference", s.reference},
                      {"abs_error", err}});
      csv << csv_double(t) << ',' << csv_double(t / pi) << ',' << csv_double(s.mean) << ','
          << csv_double(s.std) << ',' << csv_double(s.reference) << ',' << csv_double(err) << '\n';
    }
    r["max_abs_error"] = worst;
  } else {
    csv << "theta,theta_over_pi,mean,variance,skewness,scaled_variance\n";
    for (double t : thetas) {
      const PotentialEnergyReport pe = potential_energies(g, t);
      rows.push_back({{"theta", t}, {"mean", pe.mean}, {"variance", pe.variance},
                      {"skewness", pe.skewness}, {"scaled_variance", pe.scaled_variance}});
      csv << csv_double(t) << ',' << csv_double(t / pi) << ',' << csv_double(pe.mean) << ','
          << csv_double(pe.variance) << ',' << csv_double(pe.skewness) << ','
          << csv_double(pe.scaled_variance) << '\n';
    }
  }
  r["rows"] = rows;
  if (!ctx.out_dir.empty()) {
    write_file_atomic(fs::path(ctx.out_dir) / (kind + ".csv"), csv.str());
    r["csv"] = kind + ".csv";
  }
  emit(ctx, r);
  return 0;
}

// --- analyze -----------------------------------------------------------------

int cmd_analyze(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Cog, stripe and boundary analysis of a lawn file", "analyze"};
  app.option_defaults()->always_capture_default();
  std::string spec, lawn, theta_token;
  std::uint64_t seed = 1;
  Context ctx = base;
  app.add_option("--grid", spec, "grid spec")->required();
  app.add_option("--lawn", lawn, "lawn file")->required();
  app.add_option("--theta", theta_token, "jump angle (default: the one recorded in the file)");
  app.add_option("--seed", seed, "seed for generated grids");
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  const LoadedLawn l = load_lawn(spec, lawn, theta_token, seed);
  const bool antipodal = is_antipodal(l.state.setup());
  const ShellTable shells = build_shell_table(l.grid, l.theta, antipodal);
  const double p = evaluate_probability(l.state, shells);
  json r = envelope("analyze", resolved_config(app), seed, l.grid->hash(), p);
  r["theta"] = l.theta;
  r["setup"] = std::string(to_string(l.state.setup()));
  r["probability"] = p;
  r["predicted_stripes"] = predicted_stripes(l.theta);

  try {
    const CogReport c = count_cogs(l.state, l.theta);
    r["cogs"] = {{"count", c.cog_count}, {"mode", c.mode},   {"height", c.height},
                 {"height_std", c.height_std}, {"bins", c.bins}, {"axis", vec_json(c.axis)},
                 {"fourier_amplitudes", c.fourier_amplitudes}};
    if (!ctx.out_dir.empty()) {
      const BoundarySeries b = extract_boundary(l.state, c.axis, c.bins);
      std::ostringstream csv;
      csv << "phi,theta,valid\n";
      for (std::size_t i = 0; i < b.phi.size(); ++i)
        csv << csv_double(b.phi[i]) << ',' << csv_double(b.theta[i]) << ',' << int(b.valid[i]) << '\n';
      write_file_atomic(fs::path(ctx.out_dir) / "boundary.csv", csv.str());
      std::ostringstream amp;
      amp << "wavenumber,amplitude\n";
      for (std::size_t n = 1; n < c.fourier_amplitudes.size(); ++n)
        amp << n << ',' << csv_double(c.fourier_amplitudes[n]) << '\n';
      write_file_atomic(fs::path(ctx.out_dir) / "boundary_spectrum.csv", amp.str());
    }
  } catch (const Error& e) {
    r["cogs"] = {{"error", error_json(e)}};
  }
  try {
    const StripeReport s = count_stripes(l.state, l.theta);
    json sj = {{"count", s.stripe_count},   {"predicted", s.predicted},
               {"width", s.width},          {"predicted_width", s.predicted_width},
               {"zonal_ratio", s.zonal_ratio}, {"axis", vec_json(s.axis)}};
    if (!is_two_lawn(l.state.setup()) && antipodal) {
      const StripeComparison cmp = compare_regular_stripes(l.state, shells);
      sj["regular_vs_irregular"] = {{"regular", cmp.regular}, {"irregular", cmp.irregular},
                                    {"difference", cmp.difference}};
    }
    r["stripes"] = sj;
  } catch (const Error& e) {
    r["stripes"] = {{"error", error_json(e)}};
  }
  emit(ctx, r);
  return 0;
}

// --- spectral ----------------------------------------------------------------

int cmd_spectral(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Spherical-harmonic spectrum of a lawn, or the l* bound table", "spectral"};
  app.option_defaults()->always_capture_default();
  std::string spec, lawn, theta_token, thetas_token;
  std::string parity = "odd";
  std::uint64_t seed = 1;
  int ell_max = 63;
  Context ctx = base;
  app.add_option("--grid", spec, "grid spec (with --lawn)");
  app.add_option("--lawn", lawn, "lawn file; omit for the bound table only");
  app.add_option("--theta", theta_token, "jump angle (default: the one recorded in the file)");
  app.add_option("--thetas", thetas_token, "angles for the l* / upper-bound table");
  app.add_option("--ell-max", ell_max, "cutoff L")->check(CLI::PositiveNumber);
  app.add_option("--parity", parity, "odd or all (bound table)");
  app.add_option("--seed", seed, "seed for generated grids");
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  if (lawn.empty() && thetas_token.empty()) fail(ErrorCode::BadFlag, "spectral needs --lawn or --thetas");
  if (!lawn.empty() && spec.empty()) fail(ErrorCode::BadFlag, "--lawn requires --grid");

  std::optional<std::string> hash;
  std::optional<double> best;
  json body;
  if (!lawn.empty()) {
    const LoadedLawn l = load_lawn(spec, lawn, theta_token, seed);
    hash = l.grid->hash();
    const Spectrum s1 = sph_transform(l.state, 1, ell_max);
    const bool two = is_two_lawn(l.state.setup());
    const Spectrum s2 = two ? sph_transform(l.state, 2, ell_max) : s1;
    const double ps = spectral_probability(s1, s2, l.theta, l.state.setup());
    const ShellTable shells = build_shell_table(l.grid, l.theta, is_antipodal(l.state.setup()));
    const double pd = evaluate_probability(l.state, shells);
    best = pd;
    body["theta"] = l.theta;
    body["setup"] = std::string(to_string(l.state.setup()));
    body["spectral_probability"] = ps;
    body["direct_probability"] = pd;
    body["mu00"] = {s1.at(0, 0).real(), s1.at(0, 0).imag()};
    body["parseval_residual"] = parseval_residual(s1);
    body["band_power"] = band_power(s1);
    body["ell_star"] = ell_star(l.theta, ell_max, is_antipodal(l.state.setup()) ? Parity::OddOnly : Parity::All).ell;
    body["upper_bound"] = setup_upper_bound(l.theta, ell_max, l.state.setup());
    if (!ctx.out_dir.empty()) {
      write_spectrum(fs::path(ctx.out_dir) / "spectrum1.txt", s1);
      if (two) write_spectrum(fs::path(ctx.out_dir) / "spectrum2.txt", s2);
      const auto bp = band_power(s1);
      const auto ps_sums = parseval_partial_sums(s1);
      std::ostringstream csv;
      csv << "l,band_power,partial_sum\n";
      for (std::size_t l2 = 0; l2 < bp.size(); ++l2)
        csv << l2 << ',' << csv_double(bp[l2]) << ',' << csv_double(ps_sums[l2]) << '\n';
      write_file_atomic(fs::path(ctx.out_dir) / "band_power.csv", csv.str());
    }
  }
  if (!thetas_token.empty()) {
    const Parity par = parse_parity(parity);
    json rows = json::array();
    std::ostringstream csv;
    csv << "theta,theta_over_pi,ell_star,p_ell_star,upper_bound\n";
    for (double t : parse_angle_list(thetas_token)) {
      const EllStar es = ell_star(t, ell_max, par);
      const double ub = probability_upper_bound(t, ell_max, par);
      rows.push_back({{"theta", t}, {"ell_star", es.ell}, {"p_ell_star", es.value}, {"upper_bound", ub}});
      csv << csv_double(t) << ',' << csv_double(t / pi) << ',' << es.ell << ',' << csv_double(es.value)
          << ',' << csv_double(ub) << '\n';
    }
    body["bounds"] = rows;
    if (!ctx.out_dir.empty()) write_file_atomic(fs::path(ctx.out_dir) / "bounds.csv", csv.str());
  }
  json r = envelope("spectral", resolved_config(app), seed, hash, best);
  r.update(body);
  emit(ctx, r);
  return 0;
}

// --- cogs --------------------------------------------------------------------

int cmd_cogs(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Triangular-cog deficit scan against the hemisphere", "cogs"};
  app.option_defaults()->always_capture_default();
  int q = 3, k = 5, points = 200;
  std::string lo_token = "0", hi_token = "0.5";
  QuadratureOptions quad;
  quad.tolerance = 1e-11;
  Context ctx = base;
  app.add_option("--q", q, "theta = pi / q")->check(CLI::Range(2, 1000));
  app.add_option("--k", k, "cog count (odd)");
  app.add_option("--lo", lo_token, "smallest cog height");
  app.add_option("--hi", hi_token, "largest cog height");
  app.add_option("--points", points, "heights in the scan")->check(CLI::PositiveNumber);
  app.add_option("--tolerance", quad.tolerance, "absolute quadrature tolerance");
  app.add_option("--max-panels", quad.max_panels, "panel budget per 1-D integral");
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  const double lo = parse_angle(lo_token);
  const double hi = parse_angle(hi_token);
  const auto rows = deficit_scan(q, k, lo, hi, points, quad);
  json r = envelope("cogs", resolved_config(app), 0, std::nullopt, std::nullopt);
  std::size_t best = 0;
  bool decreasing = true;
  json maxima = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].deficit > rows[best].deficit) best = i;
    if (i > 0 && rows[i].deficit >= rows[i - 1].deficit) decreasing = false;
    if (i > 0 && i + 1 < rows.size() && rows[i].deficit > rows[i - 1].deficit &&
        rows[i].deficit > rows[i + 1].deficit)
      maxima.push_back({{"height", rows[i].height}, {"deficit", rows[i].deficit}});
  }
  r["q"] = q;
  r["k"] = k;
  r["theta"] = pi / q;
  r["hemisphere"] = 1.0 - 1.0 / q;
  r["max_deficit"] = {{"height", rows[best].height}, {"deficit", rows[best].deficit}};
  r["interior_maxima"] = maxima;
  r["strictly_decreasing"] = decreasing;
  if (!ctx.out_dir.empty()) {
    write_deficit_csv(fs::path(ctx.out_dir) / "deficit.csv", rows);
    r["csv"] = "deficit.csv";
  }
  emit(ctx, r);
  return 0;
}

// --- stripes-model -------------------------------------------------------------

int cmd_stripes_model(const std::vector<std::string>& args, const Context& base) {
  CLI::App app{"Planar stripe model u(r) and its optimum", "stripes-model"};
  app.option_defaults()->always_capture_default();
  std::vector<double> rs;
  Context ctx = base;
  app.add_option("--r", rs, "jump length in stripe widths (repeatable)")->check(CLI::PositiveNumber);
  app.add_option("--out", ctx.out_dir, "output directory");
  if (!parse_args(app, args, ctx)) return 0;

  json r = envelope("stripes-model", resolved_config(app), 0, std::nullopt, std::nullopt);
  const double r_star = planar_stripe_optimum();
  r["optimum"] = {{"r", r_star}, {"u", planar_stripe_success(r_star)}};
  json rows = json::array();
  for (double x : rs)
    rows.push_back({{"r", x}, {"u", planar_stripe_success(x)}, {"du_dr", planar_stripe_success_derivative(x)}});
  r["values"] = rows;
  if (rs.size() == 1) r["u"] = rows[0]["u"];
  emit(ctx, r);
  return 0;
}

using Handler = std::function<int(const std::vector<std::string>&, const Context&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"grid", cmd_grid},         {"anneal", cmd_anneal},     {"evaluate", cmd_evaluate},
      {"diagnose", cmd_diagnose}, {"analyze", cmd_analyze},   {"spectral", cmd_spectral},
      {"cogs", cmd_cogs},         {"stripes-model", cmd_stripes_model},
  };
  return h;
}

void print_error(std::ostream& err, ErrorCode code, const std::string& message) {
  json e = {{"schema", kSchema}, {"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
  err << e.dump() << '\n';
}

std::string usage() {
  std::string s = "usage: grasshopper <command> [flags]\ncommands:";
  for (const auto& [name, _] : handlers()) s += " " + name;
  return s + "\nrun 'grasshopper <command> --help' for flags\n";
}

}  // namespace

double parse_angle(const std::string& token) {
  std::string t;
  for (char c : token)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) fail(ErrorCode::BadFlag, "empty angle token");
  const auto p = t.find("pi");
  if (p == std::string::npos) return parse_decimal(t, token);
  const std::string head = t.substr(0, p);
  const std::string tail = t.substr(p + 2);
  double v = pi;
  if (!head.empty()) v *= parse_decimal(head.back() == '*' ? head.substr(0, head.size() - 1) : head, token);
  if (!tail.empty()) {
    if (tail[0] != '/') fail(ErrorCode::BadFlag, "bad angle token '" + token + "'");
    const double d = parse_decimal(tail.substr(1), token);
    if (d == 0.0) fail(ErrorCode::BadFlag, "division by zero in '" + token + "'");
    v /= d;
  }
  return v;
}

std::vector<double> parse_angle_list(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_angle(item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) fail(ErrorCode::BadFlag, "range '" + item + "' needs a:b:count");
    const double a = parse_angle(item.substr(0, c1));
    const double b = parse_angle(item.substr(c1 + 1, c2 - c1 - 1));
    const double n = parse_decimal(item.substr(c2 + 1), item);
    if (n < 1 || n != std::floor(n)) fail(ErrorCode::BadFlag, "range count must be a positive integer");
    const int count = static_cast<int>(n);
    for (int i = 0; i < count; ++i) out.push_back(count == 1 ? a : a + (b - a) * i / (count - 1));
  }
  if (out.empty()) fail(ErrorCode::BadFlag, "empty angle list");
  return out;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    print_error(err, ErrorCode::UnknownCommand, "no command given");
    err << usage();
    return 2;
  }
  if (args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    out << usage();
    return 0;
  }
  const auto it = handlers().find(args[0]);
  if (it == handlers().end()) {
    print_error(err, ErrorCode::UnknownCommand, "unknown command '" + args[0] + "'");
    return 2;
  }
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  Context ctx;
  ctx.out = &out;
  try {
    return it->second(rest, ctx);
  } catch (const CLI::ParseError& e) {
    print_error(err, ErrorCode::BadFlag, e.what());
    return 2;
  } catch (const Error& e) {
    print_error(err, e.code(), e.what());
    return e.code() == ErrorCode::BadFlag || e.code() == ErrorCode::UnknownCommand ? 2 : 1;
  } catch (const std::exception& e) {
    print_error(err, ErrorCode::IoError, e.what());
    return 1;
  }
}

}  // namespace grasshopper
