#pragma once

// Experiment configuration, the named presets, and the runner that writes
// spectrum.csv / convergence.csv / summary.json reports.

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "softfem/assembly.hpp"
#include "softfem/gevp.hpp"
#include "softfem/mesh.hpp"

namespace softfem {

struct MeshSpec {
  // interval, square, cube (uniform or explicit breakpoints), unit-square-tri,
  // lshape-tri, mesh-file
  std::string domain = "interval";
  int cells = 10;                          // per axis; `n` for the triangulations
  std::map<int, int> cells_by_degree;      // overrides `cells` per degree
  std::vector<std::vector<double>> breakpoints;
  std::string file;

  int dim() const;
  bool unit_box() const;  // the domain is (0,1)^d, so exact Laplace modes apply
  Mesh build(int cells_per_axis) const;
};

struct EtaSetting {
  enum class Policy { Galerkin, Default, Explicit };
  Policy policy = Policy::Default;
  double value = 0.0;  // explicit value
  bool stiffen = false;

  /// Resolved softness parameter for a degree on a mesh kind.
  double resolve(int degree, MeshKind kind, int dim) const;
  std::string tag() const;
};

struct RunConfig {
  std::string name = "run";
  std::string kappa = "1";
  MeshSpec mesh;
  std::vector<int> degrees{1};
  std::vector<EtaSetting> etas{EtaSetting{}};
  std::size_t modes = 0;  // rows per spectrum.csv, 0 = all

  enum class Reference { Auto, Exact, Computed };
  Reference reference = Reference::Auto;
  int reference_degree = 7;
  int reference_refine = 4;

  bool eigenfunctions = false;
  bool jump_ratio = false;
  std::vector<int> eigenfunction_modes;  // 1-based; empty = every mode
  std::map<int, std::vector<int>> ladder;  // degree -> cells per axis; empty = single mesh
  PenaltyOptions penalty;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<RunConfig> runs;
};

/// Parses the JSON document; ConfigError names the offending field.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

struct RunOverrides {
  std::optional<std::size_t> modes;
  std::optional<std::string> eta;  // "default", "0"/"galerkin", or a number
  bool stiffen = false;
};
void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides);

struct Bounds {
  int lower_violations = 0;  // lambda_soft < gamma_p lambda_fem
  int upper_violations = 0;  // lambda_soft >= lambda_fem
  // upper violations within 8 eps lambda_max, i.e. ties at the rounding level of the solves
  int upper_roundoff = 0;
};

struct CaseResult {
  std::string run, name;
  int degree = 1;
  int cells = 0;
  double eta = 0.0;
  bool stiffen = false;
  EtaSetting::Policy policy = EtaSetting::Policy::Default;
  double eta_max = 0.0, eta_default = 0.0, gamma_p = 0.0;
  std::size_t num_dofs = 0;
  Eigen::VectorXd lambda_ref, lambda_fem, lambda_soft;
  Eigen::VectorXd relerr_fem, relerr_soft;
  Eigen::VectorXd h1err, l2err, jump_ratio;  // NaN where not computed
  std::optional<StiffnessMetrics> metrics;
  double coercivity_margin = 0.0;
  double top_decile_fem = 0.0, top_decile_soft = 0.0;
  std::optional<Bounds> bounds;  // only for softening with eta <= eta_max
  std::string reference_kind;
  std::string csv_path;
};

struct RateResult {
  std::string run;
  int degree = 1;
  int mode = 1;
  std::string quantity;  // relerr, h1err, l2err
  double rate = 0.0;
  int used = 0, dropped = 0;
};

struct ExperimentResult {
  std::vector<CaseResult> cases;
  std::vector<RateResult> rates;
  bool coercivity_violation = false;
};

/// Runs every case (concurrently, capped by SOFTFEM_THREADS) and writes the
/// reports under `out_dir` when it is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir);

/// Column order of spectrum.csv.
const std::vector<std::string>& spectrum_csv_columns();

/// Exit status: 0 ok, 2 config error, 3 solver failure, 4 coercivity violation.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitCoercivity = 4 };

}  // namespace softfem
