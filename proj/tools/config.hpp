#pragma once

// Config file + flag handling for the qstrat CLI.

#include <CLI11.hpp>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "qstrat/qstrat.hpp"

namespace qstrat::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  // [field]
  std::string kind = "riesz_sum";
  int n = 3;
  double p = 3.0;
  double domain_radius = 2.0;
  std::string centers = "0,0,0";
  std::string weights = "1";
  std::string plane;
  double value = 0.0;
  std::string poly = "1:1,0";
  int complex_dim = 1;
  std::string harmonic;
  std::string grid;

  // [analysis]
  std::string points = "0,0,0";
  std::string radii = "0.05,0.1,0.2,0.3,0.45";
  double c = 0.5;
  double step = 0.05;
  double step_per_radius = 0.5;
  double search_radius = 1.0;
  double eta = 0.08;
  int k = 0;
  double r = 0.125;
  int budget = 16;
  double gamma = 0.25;
  int jmax = 3;
  double epsilon = 0.05;
  double lambda = 0.0;
  int samples = 64;
  std::string family = "full";
  bool normalize = true;
  double tolerance = 2e-3;

  // [quadrature]
  int sphere_nodes = 2048;
  int shells = 32;
  std::uint64_t seed = 1;

  // [output]
  std::string json = "-";
  std::string csv;
};

inline void register_options(CLI::App& app, Settings& s) {
  app.add_option("--field.kind", s.kind, "riesz_sum | plane_kernel | constant | log_modulus | harmonic_plus_kernel | grid");
  app.add_option("--field.n", s.n, "ambient dimension");
  app.add_option("--field.p", s.p, "Riesz characteristic");
  app.add_option("--field.domain_radius", s.domain_radius);
  app.add_option("--field.centers", s.centers, "kernel centers: 'x1,x2,..; y1,y2,..'");
  app.add_option("--field.weights", s.weights, "kernel weights: 'w1,w2,..'");
  app.add_option("--field.plane", s.plane, "coordinate axes spanning V, e.g. '3'; empty for V = 0");
  app.add_option("--field.value", s.value, "constant value");
  app.add_option("--field.poly", s.poly, "complex monomials 're[/im]:e1[,e2]; ...'");
  app.add_option("--field.complex_dim", s.complex_dim);
  app.add_option("--field.harmonic", s.harmonic, "harmonic monomials 'coef:e1,e2,..; ...'");
  app.add_option("--field.grid", s.grid, "grid CSV path");

  app.add_option("--analysis.points", s.points, "query points: 'x1,..; y1,..'");
  app.add_option("--analysis.radii", s.radii);
  app.add_option("--analysis.c", s.c, "density threshold");
  app.add_option("--analysis.step", s.step, "lattice step");
  app.add_option("--analysis.step_per_radius", s.step_per_radius);
  app.add_option("--analysis.search_radius", s.search_radius);
  app.add_option("--analysis.eta", s.eta);
  app.add_option("--analysis.k", s.k);
  app.add_option("--analysis.r", s.r);
  app.add_option("--analysis.budget", s.budget, "Grassmannian search budget");
  app.add_option("--analysis.gamma", s.gamma);
  app.add_option("--analysis.jmax", s.jmax);
  app.add_option("--analysis.epsilon", s.epsilon);
  app.add_option("--analysis.lambda", s.lambda, "L1 bound; 0 uses twice the measured norm");
  app.add_option("--analysis.samples", s.samples, "Grassmannian samples");
  app.add_option("--analysis.family", s.family, "full | complex_lines");
  app.add_option("--analysis.normalize", s.normalize);
  app.add_option("--analysis.tolerance", s.tolerance, "monotonicity tolerance");

  app.add_option("--quadrature.sphere_nodes", s.sphere_nodes);
  app.add_option("--quadrature.shells", s.shells);
  app.add_option("--quadrature.seed", s.seed);

  app.add_option("--output.json", s.json, "report path, '-' for stdout");
  app.add_option("--output.csv", s.csv, "CSV path prefix");
}

/// Config file entries as flags, to be parsed ahead of the command line so flags win.
inline std::vector<std::string> config_flags(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  std::vector<std::string> out;
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    if (it.parents.size() != 1) throw UsageError("config key outside a section: " + it.fullname());
    out.push_back("--" + it.fullname());
    if (it.inputs.empty()) throw UsageError("config key without value: " + it.fullname());
    std::string joined;
    for (std::size_t i = 0; i < it.inputs.size(); ++i) joined += (i ? "," : "") + it.inputs[i];
    out.push_back(joined);
  }
  return out;
}

inline nlohmann::json to_json(const Settings& s) {
  using nlohmann::json;
  return json{{"field", {{"kind", s.kind}, {"n", s.n}, {"p", s.p}, {"domain_radius", s.domain_radius},
                         {"centers", s.centers}, {"weights", s.weights}, {"plane", s.plane}, {"value", s.value},
                         {"poly", s.poly}, {"complex_dim", s.complex_dim}, {"harmonic", s.harmonic}, {"grid", s.grid}}},
              {"analysis", {{"points", s.points}, {"radii", s.radii}, {"c", s.c}, {"step", s.step},
                            {"step_per_radius", s.step_per_radius}, {"search_radius", s.search_radius}, {"eta", s.eta},
                            {"k", s.k}, {"r", s.r}, {"budget", s.budget}, {"gamma", s.gamma}, {"jmax", s.jmax},
                            {"epsilon", s.epsilon}, {"lambda", s.lambda}, {"samples", s.samples}, {"family", s.family},
                            {"normalize", s.normalize}, {"tolerance", s.tolerance}}},
              {"quadrature", {{"sphere_nodes", s.sphere_nodes}, {"shells", s.shells}, {"seed", s.seed}}}};
}

/// 64-bit FNV-1a.
inline std::string fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---- list parsing

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (auto tok : detail::split(text, ',')) {
    tok = CLI::detail::trim_copy(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(detail::parse_double(tok));
    } catch (const Error&) {
      throw UsageError("bad number '" + tok + "' in " + what);
    }
  }
  return out;
}

inline std::vector<Point> parse_points(const std::string& text, int n, const std::string& what) {
  std::vector<Point> out;
  for (const auto& chunk : detail::split(text, ';')) {
    const auto xs = parse_list(chunk, what);
    if (xs.empty()) continue;
    if (static_cast<int>(xs.size()) != n) throw UsageError(what + ": point with " + std::to_string(xs.size()) + " coordinates in dimension " + std::to_string(n));
    Point x{};
    for (int d = 0; d < n; ++d) x[d] = xs[d];
    out.push_back(x);
  }
  return out;
}

inline std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_list(text, what)) {
    if (v != std::floor(v)) throw UsageError(what + " must be integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline Polynomial parse_polynomial(const std::string& text) {
  std::vector<Polynomial::Term> terms;
  for (const auto& chunk : detail::split(text, ';')) {
    if (CLI::detail::trim_copy(chunk).empty()) continue;
    const auto parts = detail::split(chunk, ':');
    if (parts.size() != 2) throw UsageError("harmonic term must read 'coef:e1,e2,..'");
    Polynomial::Term t;
    t.coefficient = parse_list(parts[0], "field.harmonic").at(0);
    const auto e = parse_ints(parts[1], "field.harmonic");
    if (e.size() > static_cast<std::size_t>(kMaxDim)) throw UsageError("too many exponents in field.harmonic");
    for (std::size_t i = 0; i < e.size(); ++i) t.exponents[i] = e[i];
    terms.push_back(t);
  }
  return Polynomial(terms);
}

inline ComplexPolynomial parse_complex(const std::string& text, int m) {
  ComplexPolynomial poly;
  poly.m = m;
  for (const auto& chunk : detail::split(text, ';')) {
    if (CLI::detail::trim_copy(chunk).empty()) continue;
    const auto parts = detail::split(chunk, ':');
    if (parts.size() != 2) throw UsageError("complex term must read 're[/im]:e1[,e2]'");
    const auto coef = detail::split(parts[0], '/');
    const double re = parse_list(coef[0], "field.poly").at(0);
    const double im = coef.size() > 1 ? parse_list(coef[1], "field.poly").at(0) : 0.0;
    ComplexPolynomial::Term t;
    t.coefficient = {re, im};
    const auto e = parse_ints(parts[1], "field.poly");
    if (static_cast<int>(e.size()) != m) throw UsageError("field.poly exponents must match field.complex_dim");
    for (int i = 0; i < m; ++i) t.exponents[i] = e[i];
    poly.terms.push_back(t);
  }
  return poly;
}

inline ScalarField build_field(const Settings& s) {
  if (s.kind != "grid" && (s.n < 1 || s.n > kMaxDim)) throw UsageError("field.n must be in 1..4");
  const Ball domain{Point{}, s.domain_radius};
  if (s.kind == "riesz_sum") {
    const auto centers = parse_points(s.centers, s.n, "field.centers");
    auto w = parse_list(s.weights, "field.weights");
    if (w.size() == 1 && centers.size() > 1) w.assign(centers.size(), w[0]);
    if (w.size() != centers.size()) throw UsageError("field.weights must match field.centers");
    return riesz_sum(centers, w, s.p, s.n, domain);
  }
  if (s.kind == "plane_kernel") {
    std::vector<int> axes = parse_ints(s.plane, "field.plane");
    for (int& a : axes) {
      if (a < 1 || a > s.n) throw UsageError("field.plane axes are 1-based and at most n");
      --a;
    }
    return plane_kernel(PlaneFrame::coordinate(s.n, axes), s.p, domain);
  }
  if (s.kind == "constant") return constant_field(s.n, s.value, s.p, domain);
  if (s.kind == "log_modulus") {
    if (s.n != 2 * s.complex_dim) throw UsageError("log_modulus needs field.n = 2 * field.complex_dim");
    return log_modulus(parse_complex(s.poly, s.complex_dim), domain);
  }
  if (s.kind == "harmonic_plus_kernel") {
    const auto centers = parse_points(s.centers, s.n, "field.centers");
    const auto w = parse_list(s.weights, "field.weights");
    if (centers.size() != 1 || w.size() != 1) throw UsageError("harmonic_plus_kernel takes one center and one weight");
    return harmonic_plus_kernel(parse_polynomial(s.harmonic), centers[0], w[0], s.p, s.n, domain);
  }
  if (s.kind == "grid") {
    if (s.grid.empty()) throw UsageError("field.grid path missing");
    std::ifstream in(s.grid);
    if (!in) throw UsageError("cannot open grid file " + s.grid);
    return grid_field(read_grid_csv(in), s.grid);
  }
  throw UsageError("unknown field.kind '" + s.kind + "'");
}

}  // namespace qstrat::cli
