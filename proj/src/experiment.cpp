#include "softfem/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "softfem/coefficient.hpp"
#include "softfem/error.hpp"
#include "softfem/oracle.hpp"
#include "softfem/speclab.hpp"

namespace softfem {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- config parsing helpers ----

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path + key, "missing");
  return obj.at(key);
}

int as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
  return v.get<int>();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

EtaSetting parse_eta_value(const json& v, const std::string& field) {
  EtaSetting e;
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "default") {
      e.policy = EtaSetting::Policy::Default;
    } else if (s == "galerkin" || s == "0") {
      e.policy = EtaSetting::Policy::Galerkin;
    } else {
      char* end = nullptr;
      const double x = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0') throw ConfigError(field, "expected default, galerkin or a number");
      e.policy = x == 0.0 ? EtaSetting::Policy::Galerkin : EtaSetting::Policy::Explicit;
      e.value = x;
    }
  } else if (v.is_number()) {
    e.value = v.get<double>();
    e.policy = e.value == 0.0 ? EtaSetting::Policy::Galerkin : EtaSetting::Policy::Explicit;
  } else if (v.is_object()) {
    e = parse_eta_value(require(v, "value", field + "."), field + ".value");
    if (v.contains("stiffen")) {
      if (!v.at("stiffen").is_boolean()) throw ConfigError(field + ".stiffen", "expected a boolean");
      e.stiffen = v.at("stiffen").get<bool>();
    }
  } else {
    throw ConfigError(field, "expected default, galerkin, a number or {value, stiffen}");
  }
  if (e.policy == EtaSetting::Policy::Explicit && !(e.value > 0.0)) throw ConfigError(field, "must be nonnegative");
  return e;
}

std::map<int, int> parse_int_map(const json& v, const std::string& field) {
  if (!v.is_object()) throw ConfigError(field, "expected an object keyed by degree");
  std::map<int, int> out;
  for (const auto& [k, val] : v.items()) {
    int key = 0;
    try {
      key = std::stoi(k);
    } catch (...) {
      throw ConfigError(field, "keys must be degrees");
    }
    out[key] = as_int(val, field + "." + k);
  }
  return out;
}

std::vector<int> parse_int_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "expected a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

RunConfig parse_run(const json& r, const std::string& prefix) {
  if (!r.is_object()) throw ConfigError(prefix.empty() ? "runs" : prefix, "expected an object");
  RunConfig run;
  const std::string p = prefix.empty() ? "" : prefix + ".";
  if (r.contains("name")) run.name = as_string(r.at("name"), p + "name");

  const json& prob = require(r, "problem", p);
  const std::string pp = p + "problem.";
  if (prob.contains("kappa")) {
    run.kappa = as_string(prob.at("kappa"), pp + "kappa");
    try {
      (void)parse_coefficient(run.kappa);
    } catch (const ParseError& e) {
      throw ConfigError(pp + "kappa", e.what());
    }
  }
  run.mesh.domain = as_string(require(prob, "domain", pp), pp + "domain");
  static const std::vector<std::string> domains{"interval", "square", "cube", "unit-square-tri", "lshape-tri",
                                                "mesh-file"};
  if (std::find(domains.begin(), domains.end(), run.mesh.domain) == domains.end())
    throw ConfigError(pp + "domain", "unknown domain '" + run.mesh.domain + "'");
  if (prob.contains("cells")) run.mesh.cells = as_int(prob.at("cells"), pp + "cells");
  if (prob.contains("n")) run.mesh.cells = as_int(prob.at("n"), pp + "n");
  if (prob.contains("cells_by_degree")) run.mesh.cells_by_degree = parse_int_map(prob.at("cells_by_degree"), pp + "cells_by_degree");
  if (prob.contains("breakpoints")) {
    const json& b = prob.at("breakpoints");
    if (!b.is_array() || b.empty()) throw ConfigError(pp + "breakpoints", "expected a list of axes");
    // a flat list is a single axis
    if (b[0].is_number()) {
      std::vector<double> axis;
      for (std::size_t i = 0; i < b.size(); ++i) axis.push_back(as_number(b[i], pp + "breakpoints"));
      run.mesh.breakpoints.push_back(axis);
    } else {
      for (std::size_t a = 0; a < b.size(); ++a) {
        std::vector<double> axis;
        if (!b[a].is_array()) throw ConfigError(pp + "breakpoints", "expected lists of numbers");
        for (const auto& x : b[a]) axis.push_back(as_number(x, pp + "breakpoints"));
        run.mesh.breakpoints.push_back(axis);
      }
    }
  }
  if (prob.contains("file")) run.mesh.file = as_string(prob.at("file"), pp + "file");
  if (run.mesh.domain == "mesh-file" && run.mesh.file.empty()) throw ConfigError(pp + "file", "missing");
  if (run.mesh.cells < 1) throw ConfigError(pp + "cells", "must be >= 1");
  if (run.mesh.domain == "lshape-tri" && run.mesh.cells % 2 != 0) throw ConfigError(pp + "n", "must be even");

  if (r.contains("degrees")) {
    run.degrees = parse_int_list(r.at("degrees"), p + "degrees");
    if (run.degrees.empty()) throw ConfigError(p + "degrees", "must not be empty");
    for (int d : run.degrees)
      if (d < 1 || d > 10) throw ConfigError(p + "degrees", "degrees must lie in 1..10");
  }
  if (r.contains("eta")) {
    const json& e = r.at("eta");
    run.etas.clear();
    if (e.is_array()) {
      if (e.empty()) throw ConfigError(p + "eta", "must not be empty");
      for (std::size_t i = 0; i < e.size(); ++i) run.etas.push_back(parse_eta_value(e[i], p + "eta[" + std::to_string(i) + "]"));
    } else {
      run.etas.push_back(parse_eta_value(e, p + "eta"));
    }
  }
  if (r.contains("stiffen")) {
    if (!r.at("stiffen").is_boolean()) throw ConfigError(p + "stiffen", "expected a boolean");
    if (r.at("stiffen").get<bool>())
      for (auto& e : run.etas) e.stiffen = true;
  }
  if (r.contains("modes")) {
    const int m = as_int(r.at("modes"), p + "modes");
    if (m < 0) throw ConfigError(p + "modes", "must be >= 0");
    run.modes = static_cast<std::size_t>(m);
  }
  if (r.contains("reference")) {
    const json& ref = r.at("reference");
    const std::string rp = p + "reference.";
    if (!ref.is_object()) throw ConfigError(p + "reference", "expected an object");
    if (ref.contains("kind")) {
      const std::string k = as_string(ref.at("kind"), rp + "kind");
      if (k == "auto")
        run.reference = RunConfig::Reference::Auto;
      else if (k == "exact")
        run.reference = RunConfig::Reference::Exact;
      else if (k == "computed")
        run.reference = RunConfig::Reference::Computed;
      else
        throw ConfigError(rp + "kind", "expected auto, exact or computed");
    }
    if (ref.contains("degree")) run.reference_degree = as_int(ref.at("degree"), rp + "degree");
    if (ref.contains("refine")) run.reference_refine = as_int(ref.at("refine"), rp + "refine");
    if (run.reference_degree < 1 || run.reference_refine < 1) throw ConfigError(rp + "degree", "must be >= 1");
  }
  if (r.contains("outputs")) {
    const json& o = r.at("outputs");
    if (!o.is_array()) throw ConfigError(p + "outputs", "expected a list");
    for (const auto& item : o) {
      const std::string s = as_string(item, p + "outputs");
      if (s == "spectrum" || s == "metrics")
        continue;
      else if (s == "eigenfunctions")
        run.eigenfunctions = true;
      else if (s == "jump_ratio")
        run.jump_ratio = true;
      else
        throw ConfigError(p + "outputs", "unknown output '" + s + "'");
    }
  }
  if (r.contains("eigenfunction_modes")) {
    run.eigenfunction_modes = parse_int_list(r.at("eigenfunction_modes"), p + "eigenfunction_modes");
    for (int m : run.eigenfunction_modes)
      if (m < 1) throw ConfigError(p + "eigenfunction_modes", "modes are 1-based");
  }
  if (r.contains("ladder")) {
    const json& l = r.at("ladder");
    if (l.is_array()) {
      const auto levels = parse_int_list(l, p + "ladder");
      for (int d : run.degrees) run.ladder[d] = levels;
    } else if (l.is_object()) {
      for (const auto& [k, val] : l.items()) {
        int key = 0;
        try {
          key = std::stoi(k);
        } catch (...) {
          throw ConfigError(p + "ladder", "keys must be degrees");
        }
        run.ladder[key] = parse_int_list(val, p + "ladder." + k);
      }
    } else {
      throw ConfigError(p + "ladder", "expected a list or an object keyed by degree");
    }
    for (const auto& [d, levels] : run.ladder)
      if (levels.size() < 3) throw ConfigError(p + "ladder", "needs at least 3 levels");
  }
  if (r.contains("penalty")) {
    const json& pen = r.at("penalty");
    if (!pen.is_object()) throw ConfigError(p + "penalty", "expected an object");
    if (pen.contains("kappa")) {
      const std::string k = as_string(pen.at("kappa"), p + "penalty.kappa");
      if (k == "element-min")
        run.penalty.kappa = FaceKappa::ElementMin;
      else if (k == "face")
        run.penalty.kappa = FaceKappa::FaceMin;
      else
        throw ConfigError(p + "penalty.kappa", "expected element-min or face");
    }
    if (pen.contains("length")) {
      const std::string k = as_string(pen.at("length"), p + "penalty.length");
      if (k == "local")
        run.penalty.length = FaceLength::LocalMin;
      else if (k == "mesh")
        run.penalty.length = FaceLength::MeshSize;
      else
        throw ConfigError(p + "penalty.length", "expected local or mesh");
    }
  }
  return run;
}

// ---- runner helpers ----

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string eta_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int thread_count(std::size_t tasks) {
  unsigned n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("SOFTFEM_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  if (n == 0) n = 1;
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const int workers = thread_count(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex guard;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!first) first = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first) std::rethrow_exception(first);
}

struct Task {
  std::size_t run = 0;
  int degree = 1;
  int cells = 0;
  bool ladder = false;
};

int cells_for(const RunConfig& run, int degree) {
  auto it = run.mesh.cells_by_degree.find(degree);
  return it == run.mesh.cells_by_degree.end() ? run.mesh.cells : it->second;
}

bool exact_reference(const RunConfig& run, const CoefficientField& kappa) {
  if (run.reference == RunConfig::Reference::Computed) return false;
  const bool possible = run.mesh.unit_box() && kappa.is_constant();
  if (run.reference == RunConfig::Reference::Exact && !possible)
    throw ConfigError("reference.kind", "exact spectra need kappa constant on the unit box");
  return possible;
}

void write_spectrum_csv(const CaseResult& c, std::size_t rows, const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  const auto& cols = spectrum_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  const auto n = static_cast<double>(c.lambda_fem.size());
  for (std::size_t j = 0; j < rows; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    out << (j + 1) << "," << fmt((j + 1) / n) << "," << fmt(c.lambda_ref(k)) << "," << fmt(c.lambda_fem(k)) << ","
        << fmt(c.lambda_soft(k)) << "," << fmt(c.relerr_fem(k)) << "," << fmt(c.relerr_soft(k)) << ","
        << fmt(c.h1err(k)) << "," << fmt(c.l2err(k)) << "," << fmt(c.jump_ratio(k)) << "\n";
  }
}

json case_json(const CaseResult& c, const std::string& out_dir) {
  json j;
  j["run"] = c.run;
  j["case"] = c.name;
  j["p"] = c.degree;
  j["cells"] = c.cells;
  j["eta"] = c.eta;
  j["stiffen"] = c.stiffen;
  j["eta_max"] = c.eta_max;
  j["eta_default"] = c.eta_default;
  j["gamma_p"] = c.gamma_p;
  j["num_dofs"] = c.num_dofs;
  j["reference"] = c.reference_kind;
  j["coercivity_margin"] = c.coercivity_margin;
  j["top_decile_relerr_fem"] = c.top_decile_fem;
  j["top_decile_relerr_soft"] = c.top_decile_soft;
  if (c.metrics) {
    const auto& m = *c.metrics;
    j["metrics"] = {{"lambda_min", m.lambda_min},         {"lambda_max", m.lambda_max},
                    {"lambda_soft_min", m.lambda_soft_min}, {"lambda_soft_max", m.lambda_soft_max},
                    {"sigma", m.sigma},                   {"sigma_soft", m.sigma_soft},
                    {"rho", m.rho},                       {"varrho", m.varrho}};
  } else {
    j["metrics"] = nullptr;
  }
  if (c.bounds)
    j["bounds"] = {{"lower_violations", c.bounds->lower_violations}, {"upper_violations", c.bounds->upper_violations},
                   {"upper_roundoff", c.bounds->upper_roundoff}};
  else
    j["bounds"] = nullptr;
  if (!c.csv_path.empty()) j["csv"] = fs::relative(c.csv_path, out_dir).generic_string();
  return j;
}

json config_json(const RunConfig& r) {
  json j;
  j["name"] = r.name;
  j["kappa"] = r.kappa;
  j["domain"] = r.mesh.domain;
  j["cells"] = r.mesh.cells;
  if (!r.mesh.cells_by_degree.empty()) {
    json m;
    for (auto [d, c] : r.mesh.cells_by_degree) m[std::to_string(d)] = c;
    j["cells_by_degree"] = m;
  }
  if (!r.mesh.breakpoints.empty()) j["breakpoints"] = r.mesh.breakpoints;
  j["degrees"] = r.degrees;
  json etas = json::array();
  for (const auto& e : r.etas) etas.push_back({{"policy", e.tag()}, {"stiffen", e.stiffen}});
  j["eta"] = etas;
  j["modes"] = r.modes;
  j["penalty"] = {{"kappa", r.penalty.kappa == FaceKappa::FaceMin ? "face" : "element-min"},
                  {"length", r.penalty.length == FaceLength::MeshSize ? "mesh" : "local"}};
  return j;
}

}  // namespace

// ---- MeshSpec / EtaSetting ----

int MeshSpec::dim() const {
  if (domain == "interval") return 1;
  if (domain == "square" || domain == "unit-square-tri" || domain == "lshape-tri" || domain == "mesh-file") return 2;
  if (domain == "cube") return 3;
  throw ConfigError("problem.domain", "unknown domain '" + domain + "'");
}

bool MeshSpec::unit_box() const {
  if (domain == "unit-square-tri") return true;
  if (domain != "interval" && domain != "square" && domain != "cube") return false;
  for (const auto& axis : breakpoints)
    if (axis.empty() || axis.front() != 0.0 || axis.back() != 1.0) return false;
  return true;
}

Mesh MeshSpec::build(int n) const {
  if (domain == "interval" || domain == "square" || domain == "cube") {
    if (!breakpoints.empty()) {
      if (static_cast<int>(breakpoints.size()) != dim())
        throw ConfigError("problem.breakpoints", "need one axis per dimension");
      try {
        return build_cartesian_mesh(breakpoints);
      } catch (const InvalidMesh& e) {
        throw ConfigError("problem.breakpoints", e.what());
      }
    }
    return build_uniform_mesh(dim(), n);
  }
  if (domain == "unit-square-tri") return build_unit_square_triangulation(n);
  if (domain == "lshape-tri") return build_lshape_triangulation(n);
  try {
    return read_mesh_file(file);
  } catch (const Error& e) {
    throw ConfigError("problem.file", e.what());
  }
}

double EtaSetting::resolve(int degree, MeshKind kind, int dim) const {
  switch (policy) {
    case Policy::Galerkin:
      return 0.0;
    case Policy::Explicit:
      return value;
    case Policy::Default:
      return softness_parameters(degree, kind, std::max(dim, kind == MeshKind::Simplicial ? 2 : 1)).eta_default;
  }
  return 0.0;
}

std::string EtaSetting::tag() const {
  std::string s = policy == Policy::Default ? "default" : policy == Policy::Galerkin ? "galerkin" : eta_label(value);
  return stiffen ? "stiffen-" + s : s;
}

const std::vector<std::string>& spectrum_csv_columns() {
  static const std::vector<std::string> cols{"j",          "frac",       "lambda_ref", "lambda_fem", "lambda_soft",
                                             "relerr_fem", "relerr_soft", "h1err",     "l2err",      "jump_ratio"};
  return cols;
}

// ---- config entry points ----

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!doc.is_object()) throw ConfigError("<document>", "expected a JSON object");
  ExperimentConfig cfg;
  if (doc.contains("name")) cfg.name = as_string(doc.at("name"), "name");
  if (doc.contains("runs")) {
    const json& runs = doc.at("runs");
    if (!runs.is_array() || runs.empty()) throw ConfigError("runs", "expected a non-empty list");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      cfg.runs.push_back(parse_run(runs[i], "runs[" + std::to_string(i) + "]"));
      if (!runs[i].contains("name")) cfg.runs.back().name = "run" + std::to_string(i);
    }
  } else {
    cfg.runs.push_back(parse_run(doc, ""));
    if (!doc.contains("name")) cfg.runs.back().name = cfg.name;
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_overrides(ExperimentConfig& config, const RunOverrides& o) {
  for (auto& run : config.runs) {
    if (o.modes) run.modes = *o.modes;
    if (o.eta) run.etas = {parse_eta_value(json(*o.eta), "--eta")};
    if (o.stiffen)
      for (auto& e : run.etas) e.stiffen = true;
  }
}

// ---- runner ----

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  if (config.runs.empty()) throw ConfigError("runs", "no runs configured");

  std::vector<CoefficientField> kappas;
  for (const auto& run : config.runs) kappas.push_back(parse_coefficient(run.kappa));

  std::vector<Task> tasks;
  for (std::size_t r = 0; r < config.runs.size(); ++r) {
    const auto& run = config.runs[r];
    for (int p : run.degrees) {
      auto it = run.ladder.find(p);
      if (it != run.ladder.end()) {
        for (int n : it->second) tasks.push_back({r, p, n, true});
      } else {
        tasks.push_back({r, p, cells_for(run, p), false});
      }
    }
  }

  // computed references, one per (run, mesh), long enough for every degree on it
  std::map<std::pair<std::size_t, int>, std::size_t> ref_count;
  for (const auto& t : tasks) {
    const auto& run = config.runs[t.run];
    if (exact_reference(run, kappas[t.run])) continue;
    const auto mesh = std::make_shared<const Mesh>(run.mesh.build(t.cells));
    const std::size_t n = build_space(mesh, t.degree).num_dofs();
    auto& c = ref_count[{t.run, t.cells}];
    c = std::max(c, n);
  }
  std::vector<std::pair<std::pair<std::size_t, int>, std::size_t>> ref_jobs(ref_count.begin(), ref_count.end());
  std::vector<ReferenceSpectrum> ref_values(ref_jobs.size());
  parallel_for(ref_jobs.size(), [&](std::size_t i) {
    const auto& [key, count] = ref_jobs[i];
    const auto& run = config.runs[key.first];
    ref_values[i] = reference_spectrum(run.mesh.build(key.second), kappas[key.first], count, run.reference_degree,
                                       run.reference_refine);
  });
  std::map<std::pair<std::size_t, int>, const ReferenceSpectrum*> refs;
  for (std::size_t i = 0; i < ref_jobs.size(); ++i) refs[ref_jobs[i].first] = &ref_values[i];

  std::vector<std::vector<CaseResult>> per_task(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t ti) {
    const Task& t = tasks[ti];
    const RunConfig& run = config.runs[t.run];
    const CoefficientField& kappa = kappas[t.run];
    const auto mesh = std::make_shared<const Mesh>(run.mesh.build(t.cells));
    const FeSpace space = build_space(mesh, t.degree);
    const int d = mesh->dim();
    const SymMatrix K = assemble_stiffness(space, kappa);
    const SymMatrix M = assemble_mass(space);
    bool need_penalty = run.jump_ratio;
    for (const auto& e : run.etas) need_penalty |= e.resolve(t.degree, mesh->kind(), d) != 0.0;
    const SymMatrix S = need_penalty ? assemble_penalty(space, kappa, DofSet::Free, run.penalty) : SymMatrix();
    const bool want_vectors = run.eigenfunctions || run.jump_ratio;
    const auto fem = solve_gmevp(K, M, SolveMode::ValuesOnly);
    const Eigen::Index n = fem.order();

    Eigen::VectorXd reference;
    std::optional<ExactSpectrum> exact;
    std::string ref_kind;
    if (exact_reference(run, kappa)) {
      exact = exact_laplace_spectrum(d, static_cast<std::size_t>(n));
      reference = kappa(0.0) * exact->values;
      ref_kind = "exact";
    } else {
      reference = refs.at({t.run, t.cells})->values.head(n);
      ref_kind = "computed";
    }

    const SoftnessParameters sp = mesh->kind() == MeshKind::Tensor
                                      ? softness_parameters(t.degree, MeshKind::Tensor, d)
                                      : softness_parameters(t.degree, MeshKind::Simplicial, std::max(d, 2));
    const double gamma = gamma_p(t.degree, mesh->kind(), d).gamma;

    for (const auto& setting : run.etas) {
      CaseResult c;
      c.run = run.name;
      c.degree = t.degree;
      c.cells = t.cells;
      c.policy = setting.policy;
      c.stiffen = setting.stiffen;
      c.eta = setting.resolve(t.degree, mesh->kind(), d);
      c.eta_max = sp.eta_max;
      c.eta_default = sp.eta_default;
      c.gamma_p = gamma;
      c.num_dofs = static_cast<std::size_t>(n);
      c.reference_kind = ref_kind;
      c.name = "p" + std::to_string(t.degree);
      if (t.ladder || !run.mesh.cells_by_degree.empty() || run.ladder.size()) c.name += "_N" + std::to_string(t.cells);
      if (run.etas.size() > 1 || setting.stiffen) c.name += "_eta-" + setting.tag();

      const SymMatrix A = c.eta == 0.0 ? K : (setting.stiffen ? stiffen(K, S, c.eta) : soften(K, S, c.eta));
      const auto soft = solve_gmevp(A, M, want_vectors ? SolveMode::WithVectors : SolveMode::ValuesOnly);
      c.lambda_ref = reference;
      c.lambda_fem = fem.values;
      c.lambda_soft = soft.values;
      c.relerr_fem = eigenvalue_error_curve(fem.values, reference);
      c.relerr_soft = eigenvalue_error_curve(soft.values, reference);
      c.top_decile_fem = top_decile_mean(c.relerr_fem);
      c.top_decile_soft = top_decile_mean(c.relerr_soft);
      c.coercivity_margin = soft.values(0);
      try {
        c.metrics = stiffness_reduction(fem, soft);
      } catch (const IndefinitePencil&) {
        c.metrics.reset();
      }
      if (!setting.stiffen && c.eta > 0.0 && c.eta <= c.eta_max) {
        Bounds b;
        const double floor = 8.0 * std::numeric_limits<double>::epsilon() * fem.values(n - 1);
        for (Eigen::Index j = 0; j < n; ++j) {
          if (soft.values(j) < gamma * fem.values(j)) ++b.lower_violations;
          if (!(soft.values(j) < fem.values(j))) {
            ++b.upper_violations;
            if (soft.values(j) - fem.values(j) <= floor) ++b.upper_roundoff;
          }
        }
        c.bounds = b;
      }
      c.h1err = Eigen::VectorXd::Constant(n, kNaN);
      c.l2err = Eigen::VectorXd::Constant(n, kNaN);
      c.jump_ratio = Eigen::VectorXd::Constant(n, kNaN);
      if (run.eigenfunctions && exact) {
        std::vector<int> modes = run.eigenfunction_modes;
        if (modes.empty())
          for (int j = 1; j <= n; ++j) modes.push_back(j);
        for (int m : modes) {
          if (m > n) continue;
          try {
            const auto e = eigenfunction_errors(space, soft, *exact, static_cast<std::size_t>(m - 1));
            c.h1err(m - 1) = e.h1;
            c.l2err(m - 1) = e.l2;
          } catch (const MultiplicityError&) {
            // clustered modes are left empty
          }
        }
      }
      if (run.jump_ratio) {
        c.jump_ratio = jump_energy_ratio(K, S, soft, c.eta);
      }
      per_task[ti].push_back(std::move(c));
    }
  });

  ExperimentResult result;
  for (auto& v : per_task)
    for (auto& c : v) result.cases.push_back(std::move(c));

  // convergence rates over ladders
  for (std::size_t r = 0; r < config.runs.size(); ++r) {
    const auto& run = config.runs[r];
    for (const auto& [p, levels] : run.ladder) {
      for (const auto& setting : run.etas) {
        std::vector<const CaseResult*> ladder_cases;
        for (const auto& c : result.cases)
          if (c.run == run.name && c.degree == p && c.policy == setting.policy && c.stiffen == setting.stiffen &&
              (setting.policy != EtaSetting::Policy::Explicit || c.eta == setting.value))
            ladder_cases.push_back(&c);
        if (ladder_cases.size() < 3) continue;
        std::vector<int> modes = run.eigenfunction_modes;
        if (modes.empty()) modes = {1};
        for (int m : modes) {
          std::vector<double> h, rel, h1, l2;
          for (const auto* c : ladder_cases) {
            if (m > c->relerr_soft.size()) continue;
            h.push_back(1.0 / c->cells);
            rel.push_back(c->relerr_soft(m - 1));
            h1.push_back(c->h1err(m - 1));
            l2.push_back(c->l2err(m - 1));
          }
          auto add = [&](const std::string& q, const std::vector<double>& e) {
            for (double v : e)
              if (std::isnan(v)) return;
            try {
              const RateFit f = convergence_rate(h, e);
              result.rates.push_back({run.name, p, m, q, f.rate, f.used, f.dropped});
            } catch (const NumericError&) {
            }
          };
          add("relerr", rel);
          add("h1err", h1);
          add("l2err", l2);
        }
      }
    }
  }

  for (const auto& c : result.cases)
    if (c.policy == EtaSetting::Policy::Default && !c.stiffen && !(c.coercivity_margin > 0.0))
      result.coercivity_violation = true;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    json summary;
    summary["experiment"] = config.name;
    json runs = json::array();
    for (const auto& r : config.runs) runs.push_back(config_json(r));
    summary["parameters"] = runs;
    json cases = json::array();
    for (auto& c : result.cases) {
      const std::size_t rows = [&] {
        std::size_t modes = 0;
        for (const auto& r : config.runs)
          if (r.name == c.run) modes = r.modes;
        const auto n = static_cast<std::size_t>(c.lambda_fem.size());
        return modes == 0 ? n : std::min(modes, n);
      }();
      c.csv_path = (fs::path(out_dir) / c.run / c.name / "spectrum.csv").string();
      write_spectrum_csv(c, rows, c.csv_path);
      cases.push_back(case_json(c, out_dir));
    }
    summary["cases"] = cases;
    json rates = json::array();
    for (const auto& r : result.rates)
      rates.push_back({{"run", r.run},   {"p", r.degree},   {"mode", r.mode},       {"quantity", r.quantity},
                       {"rate", r.rate}, {"levels", r.used}, {"dropped", r.dropped}});
    summary["rates"] = rates;
    summary["coercivity_violation"] = result.coercivity_violation;

    // per-run convergence tables
    for (const auto& run : config.runs) {
      if (run.ladder.empty()) continue;
      const fs::path path = fs::path(out_dir) / run.name / "convergence.csv";
      fs::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary);
      out << "p,N,h,mode,relerr,h1err,l2err\n";
      std::vector<int> modes = run.eigenfunction_modes;
      if (modes.empty()) modes = {1};
      for (const auto& c : result.cases) {
        if (c.run != run.name) continue;
        for (int m : modes) {
          if (m > c.relerr_soft.size()) continue;
          out << c.degree << "," << c.cells << "," << fmt(1.0 / c.cells) << "," << m << "," << fmt(c.relerr_soft(m - 1))
              << "," << fmt(c.h1err(m - 1)) << "," << fmt(c.l2err(m - 1)) << "\n";
        }
      }
    }
    std::ofstream out(fs::path(out_dir) / "summary.json", std::ios::binary);
    out << summary.dump(2) << "\n";
  }
  return result;
}

// ---- presets ----

namespace {

RunConfig interval_run(const std::string& name, int cells, std::vector<int> degrees) {
  RunConfig r;
  r.name = name;
  r.mesh.domain = "interval";
  r.mesh.cells = cells;
  r.degrees = std::move(degrees);
  return r;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"table1", "table3", "table4", "fig1", "fig-eta-sweep", "fig-jump-ratio", "fig-2d", "fig-3d",
          "table-nonuniform", "fig-simplicial", "fig-lshape"};
}

bool is_preset(const std::string& name) {
  const auto names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "table1") {
    RunConfig r = interval_run("softfem-1d", 8, {1, 2, 3, 4});
    r.ladder = {{1, {8, 16, 32, 64}}, {2, {4, 8, 16, 32, 64}}, {3, {4, 8, 16, 32}}, {4, {4, 8, 16}}};
    r.eigenfunctions = true;
    r.eigenfunction_modes = {1, 6};
    cfg.runs.push_back(r);
  } else if (name == "table3") {
    cfg.runs.push_back(interval_run("laplace-1d", 200, {1, 2, 3, 4, 5}));
  } else if (name == "table4") {
    RunConfig r = interval_run("elliptic-1d", 200, {1, 2, 3, 4, 5});
    r.kappa = "exp(x*sin(2*pi*x))";
    r.penalty.kappa = FaceKappa::FaceMin;
    r.reference = RunConfig::Reference::Computed;
    cfg.runs.push_back(r);
  } else if (name == "fig1") {
    RunConfig r = interval_run("laplace-1d", 100, {1, 2, 3});
    r.eigenfunctions = true;
    cfg.runs.push_back(r);
  } else if (name == "fig-eta-sweep") {
    RunConfig r = interval_run("p2-n1000", 1000, {2});
    r.etas.clear();
    for (double e : {1.0 / 48, 1.0 / 24, 1.0 / 12}) r.etas.push_back({EtaSetting::Policy::Explicit, e, true});
    r.etas.push_back({EtaSetting::Policy::Explicit, 1.0 / 48, false});
    r.etas.push_back({EtaSetting::Policy::Default, 0.0, false});
    r.etas.push_back({EtaSetting::Policy::Explicit, 1.0 / 16, false});
    r.etas.push_back({EtaSetting::Policy::Explicit, 1.0 / 12, false});
    cfg.runs.push_back(r);
  } else if (name == "fig-jump-ratio") {
    RunConfig r1 = interval_run("jump-1d", 240, {1, 2, 3, 4});
    r1.mesh.cells_by_degree = {{1, 240}, {2, 120}, {3, 80}, {4, 60}};
    r1.jump_ratio = true;
    RunConfig r2 = r1;
    r2.name = "jump-2d";
    r2.mesh.domain = "square";
    r2.mesh.cells_by_degree = {{1, 48}, {2, 24}, {3, 16}, {4, 12}};
    RunConfig r3 = r1;
    r3.name = "jump-3d";
    r3.mesh.domain = "cube";
    r3.mesh.cells_by_degree = {{1, 12}, {2, 6}, {3, 4}, {4, 3}};
    cfg.runs = {r1, r2, r3};
  } else if (name == "fig-2d") {
    RunConfig r;
    r.name = "square-20";
    r.mesh.domain = "square";
    r.mesh.cells = 20;
    r.degrees = {1, 2, 3};
    cfg.runs.push_back(r);
  } else if (name == "fig-3d") {
    RunConfig r;
    r.name = "cube";
    r.mesh.domain = "cube";
    r.mesh.cells_by_degree = {{2, 8}, {3, 6}, {4, 4}};
    r.degrees = {2, 3, 4};
    cfg.runs.push_back(r);
  } else if (name == "table-nonuniform") {
    RunConfig r = interval_run("nonuniform-1d", 10, {1, 2, 3, 4, 5});
    r.mesh.breakpoints = {{0, 0.1, 0.18, 0.29, 0.41, 0.5, 0.59, 0.66, 0.81, 0.92, 1}};
    r.penalty.length = FaceLength::MeshSize;
    cfg.runs.push_back(r);
  } else if (name == "fig-simplicial") {
    RunConfig r;
    r.name = "unit-square-tri";
    r.mesh.domain = "unit-square-tri";
    r.mesh.cells = 16;
    r.degrees = {1, 2, 3};
    cfg.runs.push_back(r);
  } else if (name == "fig-lshape") {
    RunConfig r;
    r.name = "lshape-tri";
    r.mesh.domain = "lshape-tri";
    r.mesh.cells = 8;
    r.degrees = {1, 2, 3};
    r.reference = RunConfig::Reference::Computed;
    r.reference_degree = 5;
    r.reference_refine = 2;
    cfg.runs.push_back(r);
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  return cfg;
}

}  // namespace softfem
