#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tiebreak/assignment.hpp"
#include "tiebreak/model.hpp"
#include "tiebreak/solver.hpp"

namespace tiebreak::io {

struct Dataset {
    std::vector<std::string> ids;
    MatrixXd X;
    std::vector<std::string> columns;  // covariate column names from the header
};

/// Reads a CSV with header `id,x1,...,xd`. Blank or non-numeric cells are a
/// hard error naming the offending row and column.
Dataset ingest(const std::filesystem::path& path);

struct StandardizeOptions {
    bool center_scale = false;
    bool add_squares = false;
};

struct Transform {
    VectorXd means;   // per output column
    VectorXd scales;  // per output column
    std::vector<std::string> columns;
};

/// center_scale: each column to mean 0, variance 1 (denominator n-1).
/// add_squares: appends the squared scaled columns, themselves
/// re-standardized. Zero-variance columns are rejected by name.
std::pair<MatrixXd, Transform> standardize(const MatrixXd& X,
                                           const std::vector<std::string>& columns,
                                           const StandardizeOptions& options);

/// The 13 reference triage-model coefficients (intercept first, then
/// vital/vital^2 pairs: Temp, Temp^2, HR, HR^2, RR, RR^2, O2Sat, O2Sat^2,
/// SBP, SBP^2, DBP, DBP^2).
std::vector<double> mimic_table1_coefficients();

/// Scoring vector derived from the preset: the intercept is dropped and the
/// coefficients are reordered to match a 12-column layout of six
/// standardized vitals followed by their six standardized squares.
VectorXd mimic_preset_eta();

struct DeltaGrid {
    double min = 0.0;
    double max = 1.0;
    int count = 2;
};

struct SimulateSpec {
    std::string scenario;  // "builtin" or "" when sigma/eta given
    std::optional<MatrixXd> sigma;
    std::optional<VectorXd> eta;
    int n = 500;
};

struct RunConfig {
    std::optional<VectorXd> eta;
    bool eta_is_mimic_preset = false;
    std::optional<AssignmentRule> rule;  // eta filled in at resolve time
    ConstraintSet constraints;
    SolverConfig solver;
    StandardizeOptions standardize;
    std::uint64_t seed = 0;
    std::optional<DeltaGrid> delta_grid;
    std::optional<int> strata_size;           // cmd_assign: consecutive blocks
    std::optional<std::string> probs_csv;     // cmd_assign: realize existing p
    std::optional<SimulateSpec> simulate;
    bool svg = false;
    std::string raw_json;  // resolved echo for report.json
};

/// Parses the JSON run configuration. Unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);

/// Built-in simulation scenario: a fixed 5x5 reference covariance matrix and
/// the first five entries of the reference eta.
MatrixXd builtin_sigma();
VectorXd builtin_eta();

int cmd_solve(const RunConfig& config, const Dataset& data,
              const std::filesystem::path& out_dir);
int cmd_curve(const RunConfig& config, const Dataset& data,
              const std::filesystem::path& out_dir);
int cmd_assign(const RunConfig& config, const Dataset& data,
               const std::filesystem::path& out_dir);
int cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir);

/// Doubles printed with 17 significant digits (round-trip exact).
std::string format_double(double v);

}  // namespace tiebreak::io
