#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "frackap/capacity.hpp"
#include "frackap/errors.hpp"
#include "frackap/harness.hpp"
#include "frackap/hankel.hpp"
#include "frackap/kernels.hpp"

namespace frackap::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Malformed request: exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw InputError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.is_object() && j.contains(key) ? number(j, key) : fallback;
}

int integer_or(const json& j, const char* key, int fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw InputError(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

// A list of numbers, a single number, or {min, max, count} (uniform).
std::vector<double> number_list(const json& j, const char* key) {
  const json& v = field(j, key);
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InputError(std::string("field '") + key + "' must hold numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  if (v.is_object()) {
    const double lo = number(v, "min");
    const double hi = number(v, "max");
    const int count = integer_or(v, "count", 2);
    if (count < 1) throw InputError(std::string("field '") + key + ".count' must be positive");
    if (count == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    return out;
  }
  throw InputError(std::string("field '") + key + "' must be a number, a list or {min, max, count}");
}

BesselIndex parse_index(const json& j) {
  const double nd = number(j, "n");
  const int n = static_cast<int>(nd);
  if (n < 1 || n != nd) throw InputError("field 'n' must be a positive integer");
  if (!j.contains("a") || (j.at("a").is_array() && j.at("a").empty())) return BesselIndex::laplace(n);
  const auto a = number_list(j, "a");
  if (static_cast<int>(a.size()) != n) throw InputError("field 'a' must have n entries");
  return BesselIndex(a);
}

KernelSpec parse_spec(const json& j) { return KernelSpec(number(j, "gamma"), parse_index(j)); }

// ------------------------------------------------------------ table cache

std::string table_file_name(const KernelSpec& spec) {
  std::string name = "P_gamma" + num(spec.gamma()) + "_a";
  for (double a : spec.index().a()) name += "_" + num(a);
  return name + ".table";
}

const char* table_dir() {
  const char* dir = std::getenv("FRACKAP_TABLE_DIR");
  return dir && *dir ? dir : nullptr;
}

void load_table_dir() {
  const char* dir = table_dir();
  if (!dir || !fs::is_directory(dir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".table") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream is(path);
    try {
      seed_table_cache(KernelTable::read(is));
    } catch (const FormatError& e) {
      throw InputError("table cache file " + path.string() + ": " + e.what());
    }
  }
}

void store_table_dir(std::ostream& err) {
  const char* dir = table_dir();
  if (!dir) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  for (const auto& table : cached_tables()) {
    const fs::path path = fs::path(dir) / table_file_name(table->spec());
    if (fs::exists(path)) continue;
    std::ofstream os(path);
    table->write(os);
    if (!os) err << "warning: could not write table cache file " << path.string() << '\n';
  }
}

// ---------------------------------------------------------------- kernel

struct KernelRow {
  double r;
  double t;
  double value;
  std::string route;
  double est_error;
};

KernelRow kernel_row(const KernelSpec& spec, const std::string& route, double r, double t) {
  if (route == "series") {
    const auto s = P_series(spec, r, t);
    // Inside the working region the calibrated series agrees with quadrature to 1e-6 relative.
    if (s.converged) return {r, t, s.value, "series", 1e-6 * std::abs(s.value)};
  }
  if (route == "auto") {
    const auto table = cached_table(spec);
    const double v = P_eval(*table, r, t);
    return {r, t, v, "table", table->accuracy() * std::abs(v)};
  }
  HankelOptions opts;
  const double v = P_quadrature(spec, r, t, opts);
  return {r, t, v, "quadrature", opts.rel_tol * std::abs(v)};
}

void write_plot_script(const std::string& data_path, const KernelSpec& spec) {
  std::ofstream gp(data_path + ".gp");
  gp << "# gnuplot script for " << fs::path(data_path).filename().string() << "\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale y\n"
     << "set xlabel 'r'\n"
     << "set ylabel 'P(r,t)'\n"
     << "set title 'gamma = " << num(spec.gamma()) << ", d = " << num(spec.d()) << "'\n"
     << "plot '" << fs::path(data_path).filename().string() << "' using 1:3:2 with points palette title 'P'\n";
}

// ------------------------------------------------------------- transform

struct Family {
  RadialProfile profile;
  std::function<double(double)> closed_form;
};

double gauss_pair(const BesselIndex& I, double sigma, double rho) {
  const double nu = 0.5 * I.d() - 1.0;
  return sphere_measure(I) * std::pow(sigma, I.d()) * std::pow(2.0, nu) * gamma_fn(nu + 1.0) *
         std::exp(-0.5 * sigma * sigma * rho * rho);
}

Family parse_family(const json& j, const BesselIndex& I) {
  const json& fam = field(j, "family");
  if (!fam.is_string()) throw InputError("field 'family' must be a string");
  const std::string name = fam.get<std::string>();
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (name == "gaussian") {
    const double sigma = number_or(params, "sigma", 1.0);
    if (!(sigma > 0.0)) throw InputError("gaussian: sigma must be positive");
    const double c = 0.5 / (sigma * sigma);
    return {RadialProfile([c](double r) { return std::exp(-c * r * r); }, DecayHint::exponential(c, 2.0)),
            [I, sigma](double rho) { return gauss_pair(I, sigma, rho); }};
  }
  if (name == "exponential") {
    const double scale = number_or(params, "scale", 1.0);
    if (!(scale > 0.0)) throw InputError("exponential: scale must be positive");
    return {RadialProfile([scale](double r) { return std::exp(-r / scale); }, DecayHint::exponential(1.0 / scale)),
            nullptr};
  }
  if (name == "bump") {
    const double R = number_or(params, "radius", 1.0);
    if (!(R > 0.0)) throw InputError("bump: radius must be positive");
    return {RadialProfile(
                [R](double r) {
                  const double u = r / R;
                  return u < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
                },
                DecayHint::compact(R)),
            nullptr};
  }
  throw InputError("unknown profile family '" + name + "' (known: gaussian, exponential, bump)");
}

// ------------------------------------------------------------- capacity

CompactSetSpec parse_set(const json& j) {
  CompactSetSpec set;
  if (j.contains("atoms")) {
    const json& atoms = j.at("atoms");
    if (!atoms.is_array()) throw InputError("field 'atoms' must be a list of [y..., tau]");
    std::vector<Atom> list;
    for (const auto& a : atoms) {
      if (!a.is_array() || a.size() < 2) throw InputError("each atom must be [y..., tau]");
      Atom atom;
      for (std::size_t i = 0; i + 1 < a.size(); ++i) atom.y.push_back(a.at(i).get<double>());
      atom.tau = a.back().get<double>();
      list.push_back(std::move(atom));
    }
    set = CompactSetSpec::from_atoms(std::move(list));
  }
  if (j.contains("box")) {
    if (set.atoms.size()) throw InputError("give either 'atoms' or 'box', not both");
    const json& b = j.at("box");
    BoxSpec box;
    box.lo = number_list(b, "lo");
    box.hi = number_list(b, "hi");
    box.tau_lo = number(b, "tau_lo");
    box.tau_hi = number(b, "tau_hi");
    for (double r : number_list(b, "res")) box.res.push_back(static_cast<int>(r));
    box.tau_res = integer_or(b, "tau_res", 1);
    set = CompactSetSpec::from_box(std::move(box));
  }
  if (set.atoms.empty() && !set.box) throw InputError("capacity request needs 'atoms' or 'box'");
  return set;
}

json result_json(const CapacityResult& r) {
  json atoms = json::array();
  for (std::size_t i = 0; i < r.optimal_measure.atoms.size(); ++i) {
    atoms.push_back({{"y", r.optimal_measure.atoms[i].y},
                     {"tau", r.optimal_measure.atoms[i].tau},
                     {"weight", r.optimal_measure.weights[i]}});
  }
  return {{"capacity_value", r.capacity_value},
          {"raw_mass", r.raw_mass},
          {"duality_gap", r.duality_gap},
          {"norm_truncation_error", r.norm_truncation_error},
          {"variant", to_string(r.variant)},
          {"iterations", r.iterations},
          {"min_norm", r.min_norm},
          {"subset_capacity", r.subset_capacity},
          {"atoms", atoms}};
}

Refinement parse_refinement(const std::string& s) {
  if (s == "grid") return Refinement::Grid;
  if (s == "time_extent") return Refinement::TimeExtent;
  if (s == "repeat") return Refinement::Repeat;
  throw InputError("unknown refinement '" + s + "' (known: grid, time_extent, repeat)");
}

constexpr const char* kInterpretation =
    "capacity values are lower bounds; an estimate tending to 0 under refinement is consistent with "
    "removability of the set, a bounded-below trend with non-removability";

void write_capacity_csv(std::ostream& out, const CapacityResult& r) {
  out << "# capacity_value=" << num(r.capacity_value) << " duality_gap=" << num(r.duality_gap)
      << " norm_truncation_error=" << num(r.norm_truncation_error) << "\n";
  const std::size_t n = r.optimal_measure.atoms.empty() ? 0 : r.optimal_measure.atoms.front().y.size();
  for (std::size_t i = 0; i < n; ++i) out << "y" << i + 1 << " (length),";
  out << "tau (time),weight (mass)\n";
  for (std::size_t i = 0; i < r.optimal_measure.atoms.size(); ++i) {
    for (double y : r.optimal_measure.atoms[i].y) out << num(y) << ',';
    out << num(r.optimal_measure.atoms[i].tau) << ',' << num(r.optimal_measure.weights[i]) << '\n';
  }
}

void require_format(const RunConfig& cfg) {
  if (cfg.format != "csv" && cfg.format != "json") throw InputError("--format must be csv or json");
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open input file '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw InputError("malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace

int cmd_kernel(const json& request, const RunConfig& cfg, std::ostream& out) {
  require_format(cfg);
  const KernelSpec spec = parse_spec(request);
  const auto ts = number_list(request, "t");
  const auto rs = number_list(request, "r");
  const std::string route = request.value("route", std::string("auto"));
  if (route != "auto" && route != "series" && route != "quadrature") {
    throw InputError("route must be auto, series or quadrature");
  }
  for (double t : ts) {
    if (!(t > 0.0)) throw InputError("every t must be positive");
  }
  for (double r : rs) {
    if (!(r >= 0.0)) throw InputError("every r must be nonnegative");
  }
  std::vector<KernelRow> rows(ts.size() * rs.size());
  const auto count = static_cast<std::ptrdiff_t>(rows.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      rows[i] = kernel_row(spec, route, rs[i % rs.size()], ts[i / rs.size()]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (cfg.format == "json") {
    json arr = json::array();
    for (const auto& row : rows) {
      arr.push_back({{"r", row.r}, {"t", row.t}, {"P", row.value}, {"route_used", row.route},
                     {"est_error", row.est_error}});
    }
    out << arr.dump(2) << '\n';
  } else {
    out << "r (length),t (time),P (per unit weighted volume),route_used,est_error (absolute)\n";
    for (const auto& row : rows) {
      out << num(row.r) << ',' << num(row.t) << ',' << num(row.value) << ',' << row.route << ','
          << num(row.est_error) << '\n';
    }
  }
  if (request.value("plot", false) && !cfg.output.empty()) write_plot_script(cfg.output, spec);
  return kOk;
}

int cmd_transform(const json& request, const RunConfig& cfg, std::ostream& out) {
  require_format(cfg);
  const BesselIndex I = parse_index(request);
  const Family fam = parse_family(request, I);
  const auto rhos = number_list(request, "rho");
  const bool inverse = request.value("inverse", false);
  for (double rho : rhos) {
    if (!(rho >= 0.0)) throw InputError("every rho must be nonnegative");
  }
  std::vector<double> values(rhos.size());
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    values[i] = inverse ? inverse_radial_transform(I, fam.profile, rhos[i]) : radial_transform(I, fam.profile, rhos[i]);
  }
  const bool closed = fam.closed_form && !inverse;
  if (cfg.format == "json") {
    json arr = json::array();
    for (std::size_t i = 0; i < rhos.size(); ++i) {
      json row{{"rho", rhos[i]}, {"value", values[i]}};
      if (closed) row["closed_form"] = fam.closed_form(rhos[i]);
      arr.push_back(row);
    }
    out << arr.dump(2) << '\n';
  } else {
    out << (inverse ? "r (length),value" : "rho (inverse length),value") << (closed ? ",closed_form" : "") << '\n';
    for (std::size_t i = 0; i < rhos.size(); ++i) {
      out << num(rhos[i]) << ',' << num(values[i]);
      if (closed) out << ',' << num(fam.closed_form(rhos[i]));
      out << '\n';
    }
  }
  return kOk;
}

int cmd_capacity(const json& request, const RunConfig& cfg, std::ostream& out) {
  require_format(cfg);
  const KernelSpec spec = parse_spec(request);
  const double p = number(request, "p");
  const CapacityVariant variant = parse_variant(request.value("variant", std::string("C")));
  const CompactSetSpec set = parse_set(request);
  set.validate(spec.index());
  NormGrid grid;
  if (request.contains("grid")) {
    const json& g = request.at("grid");
    grid.X_max = number_or(g, "X_max", grid.X_max);
    grid.T_max = number_or(g, "T_max", grid.T_max);
    grid.nodes_x = integer_or(g, "nodes_x", grid.nodes_x);
    grid.nodes_t = integer_or(g, "nodes_t", grid.nodes_t);
  }
  SolverConfig solver;
  if (request.contains("solver")) {
    const json& s = request.at("solver");
    solver.max_iter = integer_or(s, "max_iter", solver.max_iter);
    solver.gap_tol = number_or(s, "gap_tol", solver.gap_tol);
  }
  json result;
  CapacityResult last;
  if (request.contains("trend")) {
    const json& tr = request.at("trend");
    const int levels = integer_or(tr, "levels", 3);
    const Refinement kind = parse_refinement(tr.value("refinement", std::string("grid")));
    const TrendReport report = refine_and_trend(spec, set, p, variant, grid, levels, kind, solver);
    last = report.results.back();
    result = result_json(last);
    result["trend"] = {{"parameters", report.parameters},
                       {"capacities", report.capacities},
                       {"rate", report.rate},
                       {"classification", to_string(report.classification)}};
    if (kind == Refinement::TimeExtent) result["trend"]["predicted_rate"] = predicted_time_decay_rate(spec, p);
  } else {
    last = solve_capacity(spec, set, p, variant, grid, solver);
    result = result_json(last);
  }
  result["interpretation"] = kInterpretation;
  if (cfg.format == "json") {
    out << result.dump(2) << '\n';
  } else {
    write_capacity_csv(out, last);
  }
  return kOk;
}

int cmd_verify(const json& request, const RunConfig& cfg, std::ostream& out) {
  require_format(cfg);
  HarnessConfig hc;
  if (request.is_null() || !request.contains("checks") ||
      (request.at("checks").is_string() && request.at("checks").get<std::string>() == "all")) {
    hc = HarnessConfig::full();
  } else {
    const json& checks = request.at("checks");
    if (!checks.is_array()) throw InputError("field 'checks' must be a list of check ids or \"all\"");
    for (const auto& c : checks) hc.checks.push_back(c.get<std::string>());
  }
  if (request.is_object()) {
    if (request.contains("table_scale")) hc.table_scale = number(request, "table_scale");
    hc.integrability_tol = number_or(request, "integrability_tol", hc.integrability_tol);
    if (request.contains("seed")) hc.seed = request.at("seed").get<std::uint64_t>();
  }
  if (cfg.seed) hc.seed = *cfg.seed;
  std::vector<CheckReport> reports;
  try {
    reports = run_checks(hc);
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  if (cfg.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) {
      arr.push_back({{"check_id", r.check_id}, {"anchor", r.anchor}, {"params", r.params},
                     {"status", to_string(r.status)}, {"value", r.value}, {"tolerance", r.tolerance},
                     {"witness", r.witness}});
    }
    out << arr.dump(2) << '\n';
  } else {
    write_csv(out, reports);
  }
  const bool all_pass = std::all_of(reports.begin(), reports.end(),
                                    [](const CheckReport& r) { return r.status == CheckStatus::Pass; });
  return all_pass ? kOk : kChecksFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractional Bessel heat kernels, transforms, capacities and verification"};
  app.fallthrough();
  app.require_subcommand(1);
  RunConfig cfg;
  app.add_option("--input", cfg.input, "JSON request file");
  app.add_option("--output", cfg.output, "Output file (default: standard output)");
  app.add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", cfg.threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", cfg.seed, "Seed of the sampled verification fixtures");
  app.add_flag("-v,--verbose", cfg.verbosity, "More diagnostics on standard error");
  app.add_subcommand("kernel", "Evaluate P(r, t) on a grid");
  app.add_subcommand("transform", "Radial Fourier/Hankel transform of a named profile");
  app.add_subcommand("capacity", "Solve the discretized capacity problem");
  app.add_subcommand("verify", "Run the identity and inequality checks");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? kOk : kInputError;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  try {
    json request;
    if (!cfg.input.empty()) {
      request = read_json(cfg.input);
    } else if (cfg.subcommand != "verify") {
      throw InputError("--input is required for '" + cfg.subcommand + "'");
    }
    load_table_dir();
    std::ofstream file;
    if (!cfg.output.empty()) {
      file.open(cfg.output);
      if (!file) throw InputError("cannot write output file '" + cfg.output + "'");
    }
    std::ostream& sink = cfg.output.empty() ? out : file;
    int code = kOk;
    if (cfg.subcommand == "kernel") code = cmd_kernel(request, cfg, sink);
    if (cfg.subcommand == "transform") code = cmd_transform(request, cfg, sink);
    if (cfg.subcommand == "capacity") code = cmd_capacity(request, cfg, sink);
    if (cfg.subcommand == "verify") code = cmd_verify(request, cfg, sink);
    sink.flush();
    store_table_dir(err);
    if (cfg.verbosity > 0) err << cfg.subcommand << ": exit " << code << '\n';
    return code;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const NonConvergenceError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const StepError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const DegenerateSetError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    // Domain, shape, coverage, format and unsupported-case errors all describe the request.
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace frackap::cli
