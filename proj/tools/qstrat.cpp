#include <unistd.h>

#include <climits>
#include <iostream>
#include <optional>

#include "acceptance.hpp"
#include "config.hpp"

using nlohmann::json;
using namespace qstrat;
using namespace qstrat::cli;

namespace {

constexpr int kUsage = 2;
constexpr int kInfeasible = 3;

json point_json(const Point& x, int n) {
  json a = json::array();
  for (int d = 0; d < n; ++d) a.push_back(x[d]);
  return a;
}

json points_json(const std::vector<Point>& xs, int n) {
  json a = json::array();
  for (const auto& x : xs) a.push_back(point_json(x, n));
  return a;
}

json profile_json(const RadialProfile& f) {
  return json{{"kind", to_string(f.kind())}, {"r", f.radii()}, {"value", f.values()}};
}

/// Largest decrease between consecutive entries (0 when nondecreasing).
double max_drop(const std::vector<double>& v) {
  double d = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) d = std::max(d, v[i - 1] - v[i]);
  return d;
}

class CsvSink {
 public:
  explicit CsvSink(std::string prefix) : prefix_(std::move(prefix)) {}

  void profile(const std::string& name, const std::vector<double>& r, const std::vector<double>& v) {
    if (prefix_.empty()) return;
    auto os = open(name);
    os << "r,value\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < r.size(); ++i) os << r[i] << ',' << v[i] << '\n';
  }

  void points(const std::string& name, const std::vector<Point>& xs, int n) {
    if (prefix_.empty()) return;
    auto os = open(name);
    for (int d = 0; d < n; ++d) os << (d ? "," : "") << 'x' << d + 1;
    os << '\n' << std::setprecision(17);
    for (const auto& x : xs) {
      for (int d = 0; d < n; ++d) os << (d ? "," : "") << x[d];
      os << '\n';
    }
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::ofstream open(const std::string& name) {
    const std::string path = prefix_ + "_" + name + ".csv";
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write " + path);
    files_.push_back(path);
    return os;
  }

  std::string prefix_;
  std::vector<std::string> files_;
};

struct Run {
  const Settings& s;
  const ScalarField& u;
  const Quadrature& quad;
  CsvSink& csv;
  json tolerances = json::object();

  int n() const { return u.dim(); }
  Ball search() const { return Ball{Point{}, s.search_radius}; }
  std::vector<Point> points() const { return parse_points(s.points, n(), "analysis.points"); }
  std::vector<double> radii() const { return parse_list(s.radii, "analysis.radii"); }

  HomogeneityOptions homogeneity() const {
    HomogeneityOptions o;
    o.budget = s.budget;
    o.seed = s.seed;
    o.precise = false;
    return o;
  }
};

json cmd_density(Run& run) {
  json rows = json::array();
  const auto pts = run.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto d = density(run.u, pts[i], run.quad);
    rows.push_back({{"point", point_json(pts[i], run.n())},
                    {"theta_S", d.theta_S},
                    {"theta_M", d.theta_M},
                    {"theta_V", d.theta_V},
                    {"radii_used", {d.radii_used.first, d.radii_used.second}},
                    {"consistency_V", d.consistency_V},
                    {"consistency_M", d.consistency_M},
                    {"quotients", d.quotients},
                    {"monotonicity_defect", d.monotonicity_defect},
                    {"non_subharmonic", d.non_subharmonic}});
  }
  return json{{"points", rows}};
}

json cmd_count(Run& run) {
  HighDensityOptions o;
  run.tolerances["screening"] = o.tolerance;
  const auto e = high_density_set(run.u, run.s.c, run.search(), run.s.step, run.quad, o);
  run.csv.points("points", e.points, run.n());
  run.csv.points("representatives", e.representatives, run.n());
  return json{{"components", e.count},
              {"c", run.s.c},
              {"step", e.step},
              {"representatives", points_json(e.representatives, run.n())},
              {"point_count", e.points.size()},
              {"cells_tested", e.cells_tested}};
}

json cmd_strata(Run& run) {
  const auto& s = run.s;
  const auto rep = stratum_set(run.u, s.eta, s.r, s.k, run.search(), s.step, run.quad, run.homogeneity());
  const Ball ambient{Point{}, s.search_radius + s.r};
  const double h = s.r / 4.0;
  const double tube = tube_volume(run.n(), rep.stratum, s.r, ambient, h);
  std::vector<Point> upper = rep.stratum;
  upper.insert(upper.end(), rep.indeterminate.begin(), rep.indeterminate.end());
  const double tube_outer = tube_volume(run.n(), upper, s.r, ambient, h);
  run.csv.points("stratum", rep.stratum, run.n());
  run.csv.points("indeterminate", rep.indeterminate, run.n());
  run.tolerances["tube_cell"] = h;
  return json{{"k", rep.k},
              {"eta", rep.eta},
              {"r", rep.r},
              {"step", rep.step},
              {"scales", rep.scales},
              {"lattice_points", rep.lattice_points},
              {"members", rep.stratum.size()},
              {"excluded", rep.excluded.size()},
              {"indeterminate", rep.indeterminate.size()},
              {"stratum", points_json(rep.stratum, run.n())},
              {"tube_volume", tube},
              {"tube_volume_with_indeterminate", tube_outer}};
}

GrassmannianFamily family(const Run& run) {
  const auto& s = run.s;
  if (s.family == "full") return GrassmannianFamily::full(run.n(), static_cast<int>(std::lround(run.u.p())), s.samples, s.seed);
  if (s.family == "complex_lines") return GrassmannianFamily::complex_lines(run.n(), s.samples, s.seed);
  throw UsageError("analysis.family must be full or complex_lines");
}

json cmd_energy(Run& run) {
  const auto& s = run.s;
  const auto radii = run.radii();
  const double p = run.u.p();
  json rows = json::array();
  json meta = json::object();

  std::optional<ScalarField> f_field;
  if (p > 2.0) {
    if (s.normalize) {
      const auto nm = normalize_for_monotonicity(run.u, run.quad);
      f_field = nm.field;
      meta["normalization_constant"] = nm.N;
    } else {
      f_field = run.u;
    }
  } else {
    meta["theta_F"] = "requires p > 2";
  }
  std::optional<GrassmannianFamily> fam;
  if (p == std::floor(p) && p >= 2.0 && p <= run.n()) {
    fam = family(run);
    meta["family"] = {{"kind", to_string(fam->kind)}, {"samples", fam->samples}, {"seed", fam->seed}};
  } else {
    meta["theta_G"] = "requires integer 2 <= p <= n";
  }
  run.tolerances["theta_F_monotone"] = s.tolerance;
  run.tolerances["theta_G_monotone"] = "3 standard errors";

  const auto pts = run.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    json row{{"point", point_json(pts[i], run.n())}};
    if (f_field) {
      const auto prof = f_energy_profile(*f_field, pts[i], radii, run.quad);
      const double drop = max_drop(prof.values());
      row["theta_F"] = profile_json(prof);
      row["theta_F_max_drop"] = drop;
      row["theta_F_monotone"] = drop <= s.tolerance;
      run.csv.profile("theta_F_" + std::to_string(i), prof.radii(), prof.values());
    }
    if (fam) {
      const auto g = g_energy_profile(run.u, pts[i], radii, *fam, run.quad);
      double excess = 0.0;
      for (std::size_t j = 1; j < g.profile.size(); ++j)
        excess = std::max(excess, g.profile.values()[j - 1] - g.profile.values()[j] -
                                      3.0 * (g.standard_error[j - 1] + g.standard_error[j]));
      json grows = json::array();
      for (std::size_t j = 0; j < g.profile.size(); ++j)
        grows.push_back({{"r", g.profile.radii()[j]}, {"value", g.profile.values()[j]}, {"standard_error", g.standard_error[j]}});
      row["theta_G"] = grows;
      row["theta_G_monotone"] = excess <= 0.0;
      run.csv.profile("theta_G_" + std::to_string(i), g.profile.radii(), g.profile.values());
    }
    rows.push_back(row);
  }
  if (fam) {
    const double lambda = s.lambda > 0.0 ? s.lambda : 2.0 * l1_norm(run.u, Ball{Point{}, 2.0}, run.quad).value;
    const auto b = g_energy_bound_check(run.u, lambda, *fam, run.quad);
    meta["bound"] = {{"lambda", lambda}, {"energy_ratio", b.energy_ratio}, {"annulus_ratio", b.annulus_ratio}, {"l1_norm", b.l1_norm}};
  }
  meta["points"] = rows;
  return meta;
}

json cmd_minkowski(Run& run) {
  const auto& s = run.s;
  MinkowskiOptions o;
  o.step = s.step;
  o.step_per_radius = s.step_per_radius;
  o.search = run.search();
  run.tolerances["slack"] = o.slack;
  run.tolerances["cells_per_radius"] = o.cells_per_radius;
  const auto rep = minkowski_bound_check(run.u, s.eta, run.radii(), run.quad, o);
  run.csv.profile("tube_volume", rep.radii, rep.tube_volumes);
  run.csv.profile("ratio", rep.radii, rep.ratios);
  run.csv.points("set", rep.points, run.n());
  return json{{"eta", rep.eta},
              {"p", rep.p},
              {"radii", rep.radii},
              {"tube_volumes", rep.tube_volumes},
              {"masses", rep.masses},
              {"ratios", rep.ratios},
              {"point_counts", rep.point_counts},
              {"components", rep.components},
              {"slope", rep.slope},
              {"max_ratio", rep.max_ratio},
              {"bounded", rep.bounded}};
}

json cmd_cover(Run& run) {
  const auto& s = run.s;
  DecompositionOptions d;
  d.search = run.search();
  d.budget = s.budget;
  auto o = run.homogeneity();
  o.budget = 0;
  const auto rep = decomposition_cover(run.u, s.eta, s.gamma, s.jmax, s.k, s.epsilon, run.quad, o, d);
  json trace = json::array();
  for (const auto& b : rep.trace) trace.push_back({{"scale", b.scale}, {"center", point_json(b.center, run.n())}, {"tuple", b.tuple}});
  json hist = json::array();
  for (const auto& m : rep.weight_histogram) {
    json row = json::object();
    for (const auto& [w, c] : m) row[std::to_string(w)] = c;
    hist.push_back(row);
  }
  return json{{"k", rep.k},
              {"eta", rep.eta},
              {"gamma", rep.gamma},
              {"epsilon", rep.epsilon},
              {"counts", rep.counts},
              {"tuple_counts", rep.tuple_counts},
              {"weight_histogram", hist},
              {"stratum_points", rep.stratum_points},
              {"slope", rep.slope},
              {"evaluations", rep.evaluations},
              {"trace", trace}};
}

std::vector<int> parse_criteria(const std::string& text) {
  std::vector<int> ids;
  for (const auto& tok : qstrat::detail::split(text, ',')) {
    const auto t = CLI::detail::trim_copy(tok);
    if (t.empty()) continue;
    const auto dash = t.find('-');
    try {
      const int a = std::stoi(t.substr(0, dash));
      const int b = dash == std::string::npos ? a : std::stoi(t.substr(dash + 1));
      for (int i = a; i <= b; ++i) ids.push_back(i);
    } catch (const std::exception&) {
      throw UsageError("bad criterion list '" + text + "'");
    }
  }
  for (int id : ids)
    if (id < 1 || id > 13) throw UsageError("criteria are numbered 1..13");
  return ids;
}

std::string self_path() {
  char buf[PATH_MAX];
  const ssize_t len = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (len <= 0) return {};
  buf[len] = '\0';
  return buf;
}

void emit(const std::string& text, const std::string& path) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot write " + path);
  os << text;
}

int verify(const Settings& s, const std::string& criteria) {
  acceptance::Context ctx;
  ctx.seed = s.seed;
  ctx.cli_path = self_path();
  const auto results = acceptance::run(ctx, parse_criteria(criteria), [](const acceptance::Criterion& c, double secs) {
    std::cerr << acceptance::summary_line(c, secs) << std::endl;
  });
  emit(acceptance::report_text(results, s.seed), s.json);
  for (const auto& c : results)
    if (!c.passed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative stratification toolkit"};
  app.require_subcommand(1);
  Settings s;
  std::string config_path, criteria = "1-13";
  app.add_option("--config", config_path, "INI config with [field] [analysis] [quadrature] [output] sections");
  register_options(app, s);
  app.add_option("--verify.criteria", criteria, "criteria to run, e.g. '1-12' or '3,7'");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  for (auto* o : app.get_options()) o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"density", "point densities"},
      {"strata", "stratum lattice set and tube volume"},
      {"energy", "F- and G-energy profiles with monotonicity verdicts"},
      {"minkowski", "tube-volume bound ratios and log-log slope"},
      {"cover", "decomposition cover trace"},
      {"count", "high-density components"},
      {"verify", "acceptance suite"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  try {
    // config entries go first so command-line flags override them
    for (std::size_t i = 0; i < args.size(); ++i) {
      const std::string& a = args[i];
      if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
      if (a == "--config" && i > 0) config_path = args[i - 1];
    }
    if (!config_path.empty()) {
      const auto extra = config_flags(config_path);
      for (auto it = extra.begin(); it != extra.end(); ++it) args.insert(args.end(), *it);
      std::reverse(args.end() - static_cast<std::ptrdiff_t>(extra.size()), args.end());
    }
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "verify") return verify(s, criteria);

    QuadratureConfig qc;
    qc.sphere_nodes = s.sphere_nodes;
    qc.shells = s.shells;
    qc.seed = s.seed;
    if (qc.sphere_nodes < 16 || qc.shells < 1) throw UsageError("quadrature.sphere_nodes >= 16 and quadrature.shells >= 1");
    ScalarField u;
    try {
      u = build_field(s);
    } catch (const Error& e) {
      throw UsageError(std::string("field: ") + e.what());
    }
    const Quadrature quad(qc);
    CsvSink csv(s.csv);
    Run run{s, u, quad, csv};

    json result;
    if (command == "density") result = cmd_density(run);
    else if (command == "count") result = cmd_count(run);
    else if (command == "strata") result = cmd_strata(run);
    else if (command == "energy") result = cmd_energy(run);
    else if (command == "minkowski") result = cmd_minkowski(run);
    else if (command == "cover") result = cmd_cover(run);

    const json config = to_json(s);
    json report{{"schema_version", 1},
                {"command", command},
                {"config", config},
                {"config_hash", fnv1a(config.dump())},
                {"seeds", {{"quadrature", s.seed}, {"search", s.seed}, {"grassmannian", s.seed}}},
                {"quadrature",
                 {{"sphere_nodes", quad.sphere(u.dim()).size()},
                  {"coarse_sphere_nodes", quad.coarse_sphere(u.dim()).size()},
                  {"shells", s.shells},
                  {"ball_nodes", quad.ball_nodes(u.dim())}}},
                {"field", {{"kind", s.kind}, {"label", u.label()}, {"n", u.dim()}, {"p", u.p()}, {"domain_radius", u.domain().radius}}},
                {"tolerances", run.tolerances},
                {"result", result}};
    if (!csv.files().empty()) report["csv_files"] = csv.files();
    emit(report.dump(2) + "\n", s.json);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "analysis infeasible (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "analysis infeasible: " << e.what() << '\n';
    return kInfeasible;
  }
}
