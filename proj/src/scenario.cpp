#include "psz/scenario.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "psz/contours.hpp"
#include "psz/error.hpp"
#include "psz/io.hpp"
#include "psz/parallel.hpp"
#include "psz/torus_exact.hpp"
#include "psz/zeros.hpp"

namespace psz {

namespace {

using Json = nlohmann::ordered_json;
namespace pt = boost::property_tree;
constexpr double pi = std::numbers::pi;

const std::map<std::string, std::set<std::string>> known_keys{
    {"scenario", {"name", "pipelines", "seed"}},
    {"model", {"kind", "J", "lambda", "plaquette", "states", "dim", "normalization"}},
    {"lattice", {"sizes"}},
    {"exact", {"sweep_parameter", "sweep_values", "circle_tolerance"}},
    {"metastable", {"contour_size", "cluster_norm", "tau", "c0"}},
    {"zeros", {"pairs", "seed_re", "seed_im", "step", "length"}},
    {"free_energy", {"radius_min", "radius_max", "radius_points", "angle_points"}},
    {"contour_check", {"exhaustive_limit", "samples", "identity_points", "identity_tolerance"}},
    {"compare", {"circle_points", "circle_radius", "kappa"}},
};

const std::set<std::string> known_pipelines{"exact", "contour-check", "free-energy", "zeros", "compare"};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  template <class T>
  void read(const std::string& section, const std::string& key, T& target) const {
    const auto v = raw(section, key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        target = *v;
      } else {
        std::size_t used = 0;
        if constexpr (std::is_same_v<T, double>) target = std::stod(*v, &used);
        else if constexpr (std::is_same_v<T, int>) target = std::stoi(*v, &used);
        else target = static_cast<T>(std::stoull(*v, &used));
        if (used != v->size()) throw std::invalid_argument("trailing characters");
      }
    } catch (const std::exception&) {
      fail(ErrorKind::config, source_ + ": [" + section + "] " + key + ": cannot parse '" + *v + "'");
    }
  }

  template <class T>
  void read_list(const std::string& section, const std::string& key, std::vector<T>& target) const {
    const auto v = raw(section, key);
    if (!v) return;
    target.clear();
    for (const auto& item : split(*v, ',')) {
      try {
        std::size_t used = 0;
        if constexpr (std::is_same_v<T, double>) target.push_back(std::stod(item, &used));
        else target.push_back(static_cast<T>(std::stoi(item, &used)));
        if (used != item.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        fail(ErrorKind::config, source_ + ": [" + section + "] " + key + ": cannot parse '" + item + "'");
      }
    }
  }

  [[noreturn]] void error(const std::string& section, const std::string& key, const std::string& what) const {
    fail(ErrorKind::config, source_ + ": [" + section + "] " + key + ": " + what);
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

const std::map<std::string, std::string> presets{
    {"zeros-ising", R"([scenario]
name = zeros-ising
pipelines = exact, zeros
seed = 1

[model]
kind = ising
J = 1.5

[lattice]
sizes = 3

[zeros]
pairs = 1:-1
seed_re = 1
seed_im = 0
)"},
    {"bijection-check", R"([scenario]
name = bijection-check
pipelines = contour-check
seed = 1

[model]
kind = ising
J = 1.0

[lattice]
sizes = 3

[contour_check]
identity_points = 2
)"},
};

Complex random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> radius(0.6, 1.4), angle(0.0, 2.0 * pi);
  return std::polar(radius(rng), angle(rng));
}

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

std::string label_name(const SpinModel& model, Spin s) {
  const int l = model.label(s);
  return l > 0 && model.name != "potts" ? "+" + std::to_string(l) : std::to_string(l);
}

// Accumulates artifacts and checks for one run.
struct Run {
  const Scenario& sc;
  std::filesystem::path out;
  int workers;
  RunResult result;
  Json summary = Json::object();

  void write(const std::string& name, const std::string& contents) {
    write_file(out / name, contents);
    result.files.emplace_back(name);
  }
  void check(const std::string& name, bool ok, const std::string& detail = {}) {
    result.checks.push_back({name, ok, detail});
  }
};

// Both normalizations have the same zeros; only the shifted one is a polynomial.
SpinModel polynomial_model(ModelSpec spec) {
  spec.normalization = Normalization::shifted;
  return spec.build();
}

void run_exact(Run& run) {
  const Scenario& sc = run.sc;
  std::vector<double> values = sc.sweep_values;
  if (sc.sweep_parameter.empty()) values = {std::numeric_limits<double>::quiet_NaN()};
  CsvTable table({"parameter", "L", "index", "re", "im", "modulus", "arg"});
  Json entries = Json::array();
  std::map<int, std::vector<PlotSeries>> plots;
  const std::vector<std::string> palette{"#1f4e8c", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#148f77", "#566573"};
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    ModelSpec spec = sc.model;
    if (sc.sweep_parameter == "lambda") spec.lambda = values[vi];
    else if (sc.sweep_parameter == "J") spec.J = values[vi];
    else if (sc.sweep_parameter == "plaquette") spec.plaquette = values[vi];
    const SpinModel model = polynomial_model(spec);
    for (int L : sc.sizes) {
      ExactOptions opt;
      opt.workers = run.workers;
      const auto poly = partition_polynomial(model, L, opt);
      const auto zs = exact_zeros(poly);
      std::size_t on_circle = 0;
      double inversion = 0.0;
      for (std::size_t i = 0; i < zs.roots.size(); ++i) {
        const Complex r = zs.roots[i];
        table.row({format_number(values[vi]), std::to_string(L), std::to_string(i), format_number(r.real()),
                   format_number(r.imag()), format_number(std::abs(r)), format_number(std::arg(r))});
        if (std::abs(std::abs(r) - 1.0) < sc.circle_tolerance) ++on_circle;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : zs.roots) best = std::min(best, std::abs(1.0 / std::conj(r) - s) / std::max(1.0, std::abs(s)));
        inversion = std::max(inversion, best);
      }
      const double fraction = zs.roots.empty() ? 1.0 : static_cast<double>(on_circle) / zs.roots.size();
      Json e;
      if (!sc.sweep_parameter.empty()) e[sc.sweep_parameter] = values[vi];
      e["L"] = L;
      e["degree"] = poly.degree();
      e["roots"] = zs.roots.size();
      e["roots_at_zero"] = zs.roots_at_zero;
      e["relative_residual"] = zs.relative_residual;
      e["circle_fraction"] = fraction;
      e["inversion_residual"] = inversion;
      entries.push_back(e);
      run.check("exact zeros L=" + std::to_string(L) + (sc.sweep_parameter.empty() ? "" : " " + sc.sweep_parameter + "=" + format_number(values[vi])),
                zs.relative_residual < 1e-8, "relative residual " + format_number(zs.relative_residual));
      PlotSeries ser;
      ser.points = zs.roots;
      ser.colour = palette[vi % palette.size()];
      if (!sc.sweep_parameter.empty()) ser.label = sc.sweep_parameter + " = " + format_number(values[vi]);
      plots[L].push_back(ser);
    }
  }
  run.write("exact_zeros.csv", table.str());
  run.summary["exact"] = entries;
  for (const auto& [L, series] : plots) {
    PlotOptions opt;
    opt.title = sc.name + ": exact zeros, L = " + std::to_string(L);
    run.write("exact_zeros_L" + std::to_string(L) + ".svg", svg_plot(series, opt));
  }
}

void run_contour_check(Run& run, const SpinModel& model) {
  const Scenario& sc = run.sc;
  Json entries = Json::array();
  std::mt19937_64 rng(sc.seed);
  for (int L : sc.sizes) {
    const auto rt = round_trip_check(model, L, sc.exhaustive_limit, sc.samples, sc.seed, run.workers);
    Json e;
    e["L"] = L;
    e["exhaustive"] = rt.exhaustive;
    e["checked"] = rt.checked;
    e["passed"] = rt.passed;
    run.check("round trip L=" + std::to_string(L), rt.ok(),
              std::to_string(rt.passed) + "/" + std::to_string(rt.checked) + (rt.exhaustive ? " exhaustive" : " sampled"));
    if (rt.exhaustive) {
      Json ids = Json::array();
      double worst = 0.0;
      for (int i = 0; i < sc.identity_points; ++i) {
        const Complex z = random_point(rng);
        const auto rep = torus_contour_identity_check(model, L, z);
        worst = std::max(worst, rep.max_relative_deviation);
        ids.push_back({{"z", complex_json(z)}, {"relative_deviation", rep.max_relative_deviation}});
      }
      e["identity"] = ids;
      if (sc.identity_points > 0)
        run.check("contour representation L=" + std::to_string(L), worst < sc.identity_tolerance,
                  "max relative deviation " + format_number(worst));
    }
    entries.push_back(e);
  }
  run.write("contour_check.json", entries.dump(2) + "\n");
  run.summary["contour_check"] = entries;
}

Regime choose_regime(Run& run, const SpinModel& model) {
  const Scenario& sc = run.sc;
  std::vector<Complex> samples;
  for (int k = 0; k < 8; ++k) samples.push_back(std::polar(1.0, (k + 0.5) * pi / 4));
  const auto est = estimate_regime(model, samples, sc.cutoffs.contour_size);
  Regime used{sc.tau.value_or(est.tau), sc.c0};
  Json r;
  r["tau_estimate"] = est.tau;
  r["c0_estimate"] = est.c0;
  r["M_estimate"] = est.M;
  r["hypothesis_met"] = est.hypothesis_met;
  r["tau"] = used.tau;
  r["c0"] = used.c0;
  r["contour_size"] = sc.cutoffs.contour_size;
  r["cluster_norm"] = sc.cutoffs.cluster_norm;
  run.write("regime.json", r.dump(2) + "\n");
  run.summary["regime"] = r;
  return used;
}

void run_free_energy(Run& run, const MetastableModel& meta) {
  const Scenario& sc = run.sc;
  const auto& model = meta.model();
  std::vector<Complex> grid;
  for (int i = 0; i < sc.radius_points; ++i) {
    const double r = sc.radius_points == 1 ? sc.radius_min
                                           : sc.radius_min + (sc.radius_max - sc.radius_min) * i / (sc.radius_points - 1);
    for (int k = 0; k < sc.angle_points; ++k) grid.push_back(std::polar(r, (k + 0.5) * 2.0 * pi / sc.angle_points));
  }
  const auto table = parallel_map<FreeEnergies>(grid.size(), run.workers, [&](std::size_t i) { return meta.free_energies(grid[i]); });
  Json points = Json::array();
  for (const auto& fe : table) {
    Json p;
    p["re"] = fe.z.real();
    p["im"] = fe.z.imag();
    Json f = Json::object();
    for (const auto& ph : fe.phases) f[label_name(model, ph.phase)] = std::isfinite(ph.f) ? Json(ph.f) : Json("inf");
    p["f"] = f;
    Json stable = Json::array();
    for (Spin s : fe.stable) stable.push_back(label_name(model, s));
    p["stable"] = stable;
    points.push_back(p);
  }
  run.write("free_energy.json", points.dump(1) + "\n");
  run.summary["free_energy_points"] = grid.size();
}

void run_zeros(Run& run, const MetastableModel& meta) {
  const Scenario& sc = run.sc;
  const auto& model = meta.model();
  std::vector<CoexistenceCurve> curves;
  Json curve_json = Json::array();
  for (auto [a, b] : sc.pairs) {
    TraceOptions opt;
    opt.step = sc.step;
    opt.length = sc.length;
    auto curve = trace_coexistence(meta, model.spin_index(a), model.spin_index(b), sc.curve_seed, opt);
    Json c;
    c["pair"] = {label_name(model, curve.m), label_name(model, curve.n)};
    c["closed"] = curve.closed;
    c["stop"] = curve.stop_reason;
    Json mps = Json::array();
    for (auto z : curve.multiple_points) mps.push_back(complex_json(z));
    c["multiple_points"] = mps;
    double worst = 0.0;
    Json pts = Json::array();
    for (const auto& p : curve.points) {
      pts.push_back({p.z.real(), p.z.imag(), p.arclength, p.delta, p.residual});
      worst = std::max(worst, p.residual);
    }
    c["columns"] = {"re", "im", "arclength", "delta", "residual"};
    c["points"] = pts;
    curve_json.push_back(c);
    run.check("curve " + label_name(model, curve.m) + "/" + label_name(model, curve.n) + " residual", worst < 1e-9,
              "max residual " + format_number(worst));
    curves.push_back(std::move(curve));
  }
  run.write("curves.json", curve_json.dump(1) + "\n");

  Json entries = Json::array();
  for (int L : sc.sizes) {
    std::vector<Complex> predicted;
    CsvTable table({"kind", "pair", "k", "re", "im", "modulus_residual", "phase_residual", "degraded", "match_distance"});
    std::vector<std::vector<std::string>> rows;
    double worst_mod = 0.0, worst_phase = 0.0;
    Json windings = Json::array();
    for (const auto& curve : curves) {
      const auto set = solve_zero_equations(meta, curve, L, run.workers);
      windings.push_back(set.winding);
      if (curve.closed)
        run.check("winding L=" + std::to_string(L), std::abs(set.winding - std::round(set.winding)) < 1e-6 &&
                                                        static_cast<double>(set.zeros.size()) == std::abs(std::round(set.winding)),
                  "winding " + format_number(set.winding) + ", zeros " + std::to_string(set.zeros.size()));
      for (const auto& z : set.zeros) {
        predicted.push_back(z.z);
        worst_mod = std::max(worst_mod, z.modulus_residual);
        worst_phase = std::max(worst_phase, z.phase_residual);
        rows.push_back({"predicted", label_name(model, curve.m) + "/" + label_name(model, curve.n), std::to_string(z.k),
                        format_number(z.z.real()), format_number(z.z.imag()), format_number(z.modulus_residual),
                        format_number(z.phase_residual), z.degraded ? "1" : "0", ""});
      }
    }
    run.check("zero equations L=" + std::to_string(L), worst_mod < 1e-9 && worst_phase < 1e-9,
              "modulus " + format_number(worst_mod) + ", phase " + format_number(worst_phase));
    ExactOptions eo;
    eo.workers = run.workers;
    const auto exact = exact_zeros(partition_polynomial(polynomial_model(sc.model), L, eo));
    const auto match = match_predicted_exact(predicted, exact.roots);
    std::vector<std::string> exact_distance(exact.roots.size()), predicted_distance(predicted.size());
    for (std::size_t i = 0; i < match.pairs.size(); ++i) {
      predicted_distance[match.pairs[i].first] = format_number(match.distances[i]);
      exact_distance[match.pairs[i].second] = format_number(match.distances[i]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].back() = predicted_distance[i];
    for (std::size_t i = 0; i < exact.roots.size(); ++i)
      rows.push_back({"exact", "", "", format_number(exact.roots[i].real()), format_number(exact.roots[i].imag()), "", "", "",
                      exact_distance[i]});
    for (auto& r : rows) table.row(std::move(r));
    run.write("zeros_L" + std::to_string(L) + ".csv", table.str());

    std::vector<PlotSeries> series;
    for (const auto& curve : curves) {
      PlotSeries line;
      line.style = PlotSeries::Style::line;
      line.colour = "#7f8c8d";
      for (const auto& p : curve.points) line.points.push_back(p.z);
      series.push_back(line);
    }
    series.push_back({exact.roots, PlotSeries::Style::filled, "#1f4e8c", "exact"});
    series.push_back({predicted, PlotSeries::Style::hollow, "#b03a2e", "predicted"});
    PlotOptions po;
    po.title = sc.name + ": zeros, L = " + std::to_string(L);
    run.write("zeros_L" + std::to_string(L) + ".svg", svg_plot(series, po));

    Json e;
    e["L"] = L;
    e["predicted"] = predicted.size();
    e["exact"] = exact.roots.size();
    e["winding"] = windings;
    e["max_distance"] = match.max_distance;
    e["mean_distance"] = match.mean_distance;
    e["unmatched_predicted"] = match.unmatched_predicted;
    e["unmatched_exact"] = match.unmatched_exact;
    entries.push_back(e);
  }
  run.summary["zeros"] = entries;
}

void run_compare(Run& run, const MetastableModel& meta) {
  const Scenario& sc = run.sc;
  CsvTable table({"L", "re", "im", "xi_abs", "relative", "phases", "warning"});
  Json entries = Json::array();
  std::vector<double> sups;
  for (int L : sc.sizes) {
    std::vector<Complex> pts;
    for (int k = 0; k < sc.circle_points; ++k)
      pts.push_back(std::polar(sc.circle_radius, (k + 0.5) * 2.0 * pi / sc.circle_points));
    const auto reps = parallel_map<ResidualReport>(pts.size(), run.workers,
                                                   [&](std::size_t i) { return finite_volume_residual(meta, L, pts[i], sc.kappa); });
    double sup = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& r = reps[i];
      std::string phases;
      for (Spin s : r.phases) phases += (phases.empty() ? "" : " ") + label_name(meta.model(), s);
      table.row({std::to_string(L), format_number(pts[i].real()), format_number(pts[i].imag()), format_number(std::abs(r.xi)),
                 format_number(r.relative), phases, r.warning});
      sup = std::max(sup, r.relative);
    }
    sups.push_back(sup);
    entries.push_back({{"L", L}, {"sup_relative", sup}});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < sups.size(); ++i) decreasing = decreasing && sups[i] < sups[i - 1];
  run.check("residual decreases with L", decreasing);
  run.write("residuals.csv", table.str());
  run.summary["compare"] = entries;
}

}  // namespace

SpinModel ModelSpec::build() const {
  if (kind == "ising") return ising(J, dim, normalization);
  if (kind == "perturbed_ising") {
    std::vector<MultiSpinCoupling> extra;
    if (plaquette != 0.0) {
      require(dim == 2, "plaquette coupling is defined for d = 2");
      extra.push_back({{Coord{0, 0}, Coord{1, 0}, Coord{0, 1}, Coord{1, 1}}, plaquette});
    }
    return perturbed_ising(J, extra, dim, normalization);
  }
  if (kind == "blume_capel") return blume_capel(J, lambda, dim, normalization);
  if (kind == "potts") return potts(states, J, dim);
  fail(ErrorKind::config, "unknown model kind '" + kind + "'");
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::config, source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, child] : tree) {
    const auto known = known_keys.find(section);
    if (known == known_keys.end()) fail(ErrorKind::config, source + ": unknown section [" + section + "]");
    if (!child.data().empty()) fail(ErrorKind::config, source + ": key '" + section + "' outside any section");
    for (const auto& [key, value] : child)
      if (!known->second.count(key)) fail(ErrorKind::config, source + ": [" + section + "] unknown key '" + key + "'");
  }
  const Reader r(tree, source);
  Scenario sc;
  r.read("scenario", "name", sc.name);
  if (auto v = r.raw("scenario", "pipelines")) sc.pipelines = split(*v, ',');
  r.read("scenario", "seed", sc.seed);
  r.read("model", "kind", sc.model.kind);
  r.read("model", "J", sc.model.J);
  r.read("model", "lambda", sc.model.lambda);
  r.read("model", "plaquette", sc.model.plaquette);
  r.read("model", "states", sc.model.states);
  r.read("model", "dim", sc.model.dim);
  if (auto v = r.raw("model", "normalization")) {
    if (*v == "shifted") sc.model.normalization = Normalization::shifted;
    else if (*v == "original") sc.model.normalization = Normalization::original;
    else r.error("model", "normalization", "expected 'shifted' or 'original'");
  }
  r.read_list("lattice", "sizes", sc.sizes);
  r.read("exact", "sweep_parameter", sc.sweep_parameter);
  r.read_list("exact", "sweep_values", sc.sweep_values);
  r.read("exact", "circle_tolerance", sc.circle_tolerance);
  r.read("metastable", "contour_size", sc.cutoffs.contour_size);
  r.read("metastable", "cluster_norm", sc.cutoffs.cluster_norm);
  if (auto v = r.raw("metastable", "tau"); v && *v != "auto") {
    double t = 0.0;
    r.read("metastable", "tau", t);
    sc.tau = t;
  }
  r.read("metastable", "c0", sc.c0);
  if (auto v = r.raw("zeros", "pairs")) {
    for (const auto& item : split(*v, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() != 2) r.error("zeros", "pairs", "expected label:label, got '" + item + "'");
      try {
        sc.pairs.emplace_back(std::stoi(parts[0]), std::stoi(parts[1]));
      } catch (const std::exception&) {
        r.error("zeros", "pairs", "cannot parse '" + item + "'");
      }
    }
  }
  double re = sc.curve_seed.real(), im = sc.curve_seed.imag();
  r.read("zeros", "seed_re", re);
  r.read("zeros", "seed_im", im);
  sc.curve_seed = {re, im};
  r.read("zeros", "step", sc.step);
  r.read("zeros", "length", sc.length);
  r.read("free_energy", "radius_min", sc.radius_min);
  r.read("free_energy", "radius_max", sc.radius_max);
  r.read("free_energy", "radius_points", sc.radius_points);
  r.read("free_energy", "angle_points", sc.angle_points);
  r.read("contour_check", "exhaustive_limit", sc.exhaustive_limit);
  r.read("contour_check", "samples", sc.samples);
  r.read("contour_check", "identity_points", sc.identity_points);
  r.read("contour_check", "identity_tolerance", sc.identity_tolerance);
  r.read("compare", "circle_points", sc.circle_points);
  r.read("compare", "circle_radius", sc.circle_radius);
  r.read("compare", "kappa", sc.kappa);

  // Validation.
  if (sc.pipelines.empty()) r.error("scenario", "pipelines", "no pipelines selected");
  for (const auto& p : sc.pipelines)
    if (!known_pipelines.count(p)) r.error("scenario", "pipelines", "unknown pipeline '" + p + "'");
  if (sc.sizes.empty()) r.error("lattice", "sizes", "no lattice sizes");
  SpinModel model;
  try {
    model = sc.model.build();
  } catch (const Error& e) {
    fail(ErrorKind::config, source + ": [model] " + e.what());
  }
  for (int L : sc.sizes)
    if (L < 2 * model.range + 1) r.error("lattice", "sizes", "L = " + std::to_string(L) + " is below 2R+1");
  if (!sc.sweep_parameter.empty()) {
    if (sc.sweep_parameter != "lambda" && sc.sweep_parameter != "J" && sc.sweep_parameter != "plaquette")
      r.error("exact", "sweep_parameter", "expected lambda, J or plaquette");
    if (sc.sweep_values.empty()) r.error("exact", "sweep_values", "sweep needs values");
  }
  if (std::find(sc.pipelines.begin(), sc.pipelines.end(), "zeros") != sc.pipelines.end()) {
    if (sc.pairs.empty()) r.error("zeros", "pairs", "the zeros pipeline needs at least one phase pair");
    for (auto [a, b] : sc.pairs) {
      const auto& labels = model.spin_labels;
      if (std::find(labels.begin(), labels.end(), a) == labels.end() || std::find(labels.begin(), labels.end(), b) == labels.end())
        r.error("zeros", "pairs", "unknown spin label in " + std::to_string(a) + ":" + std::to_string(b));
    }
  }
  if (sc.step <= 0.0 || sc.length <= 0.0) r.error("zeros", "step", "step and length must be positive");
  if (sc.radius_points < 1 || sc.angle_points < 1) r.error("free_energy", "radius_points", "grid must be nonempty");
  if (sc.circle_points < 1) r.error("compare", "circle_points", "must be positive");
  if (sc.cutoffs.cluster_norm > sc.cutoffs.contour_size)
    r.error("metastable", "cluster_norm", "cannot exceed contour_size");
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path), path.string()); }

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : presets) out.push_back(name);
  return out;
}

std::string preset_text(const std::string& name) {
  const auto it = presets.find(name);
  if (it == presets.end()) fail(ErrorKind::config, "unknown preset '" + name + "'");
  return it->second;
}

bool RunResult::ok() const {
  return cap_events == 0 && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok; });
}

RunResult run_scenario(const Scenario& sc, const std::filesystem::path& out, int workers) {
  Run run{sc, out, std::max(workers, 1), {}};
  std::filesystem::create_directories(out);
  const SpinModel model = sc.model.build();
  const auto has = [&](const std::string& p) { return std::find(sc.pipelines.begin(), sc.pipelines.end(), p) != sc.pipelines.end(); };
  if (has("exact")) run_exact(run);
  if (has("contour-check")) run_contour_check(run, model);
  if (has("free-energy") || has("zeros") || has("compare")) {
    const MetastableModel meta(model, choose_regime(run, model), sc.cutoffs);
    if (has("free-energy")) run_free_energy(run, meta);
    if (has("zeros")) run_zeros(run, meta);
    if (has("compare")) run_compare(run, meta);
    run.result.cap_events = meta.cap_count();
    Json caps = Json::array();
    for (const auto& c : meta.cap_log())
      caps.push_back({{"phase", label_name(model, c.phase)}, {"entry", c.entry}, {"z", complex_json(c.z)},
                      {"modulus", c.modulus}, {"bound", c.bound}});
    run.summary["cap_log"] = caps;
  }
  Json summary;
  summary["scenario"] = sc.name;
  summary["seed"] = sc.seed;
  summary["model"] = model.name;
  summary["pipelines"] = sc.pipelines;
  summary["cap_events"] = run.result.cap_events;
  Json checks = Json::array();
  for (const auto& c : run.result.checks) checks.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
  summary["checks"] = checks;
  summary["ok"] = run.result.ok();
  for (auto& [k, v] : run.summary.items()) summary[k] = v;
  run.write("summary.json", summary.dump(2) + "\n");

  auto files = run.result.files;
  std::sort(files.begin(), files.end());
  Json manifest = Json::array();
  for (const auto& f : files) {
    const auto bytes = read_file(out / f);
    manifest.push_back({{"path", f.generic_string()}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  write_file(out / "manifest.json", Json{{"scenario", sc.name}, {"files", manifest}}.dump(2) + "\n");
  run.result.files.emplace_back("manifest.json");
  return run.result;
}

}  // namespace psz
