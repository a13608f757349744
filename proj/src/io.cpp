#include "tiebreak/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tiebreak/evaluation.hpp"
#include "tiebreak/gaussian.hpp"

namespace tiebreak::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    return s.substr(b);
}

double parse_cell(const std::string& raw, const std::string& row_id,
                  const std::string& column) {
    const std::string cell = strip(raw);
    if (cell.empty()) {
        throw IngestError("empty cell at row '" + row_id + "', column '" + column + "'");
    }
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw IngestError("non-numeric cell '" + cell + "' at row '" + row_id +
                          "', column '" + column + "'");
    }
    return v;
}

}  // namespace

Dataset ingest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IngestError("empty file " + path.string());
    auto header = split_csv_line(line);
    for (auto& h : header) h = strip(h);
    if (header.size() < 2 || header[0] != "id") {
        throw IngestError("header must be `id` followed by covariate columns");
    }

    Dataset data;
    data.columns.assign(header.begin() + 1, header.end());
    const std::size_t d = data.columns.size();
    std::vector<std::vector<double>> rows;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (strip(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != d + 1) {
            throw IngestError("row " + std::to_string(row_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(d + 1));
        }
        const std::string id = strip(cells[0]);
        if (id.empty()) {
            throw IngestError("empty id at row " + std::to_string(row_no));
        }
        data.ids.push_back(id);
        std::vector<double> row(d);
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = parse_cell(cells[j + 1], id, data.columns[j]);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IngestError("no data rows in " + path.string());
    data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) data.X(i, j) = rows[i][j];
    }
    return data;
}

std::pair<MatrixXd, Transform> standardize(const MatrixXd& X,
                                           const std::vector<std::string>& columns,
                                           const StandardizeOptions& options) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();

    auto scale_columns = [&](MatrixXd& M, const std::vector<std::string>& names,
                             VectorXd& means, VectorXd& scales) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            const double mean = M.col(j).mean();
            const double var =
                (M.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
            if (var < 1e-24) {
                throw ZeroVariance("column '" + names[j] + "' has zero variance");
            }
            const double scale = std::sqrt(var);
            M.col(j) = (M.col(j).array() - mean) / scale;
            means[j] = mean;
            scales[j] = scale;
        }
    };

    MatrixXd base = X;
    Transform tf;
    tf.columns = columns;
    VectorXd base_means = VectorXd::Zero(d);
    VectorXd base_scales = VectorXd::Ones(d);
    if (options.center_scale) {
        if (n < 2) throw InvalidArgument("standardize: need n >= 2 to scale");
        scale_columns(base, columns, base_means, base_scales);
    }
    if (!options.add_squares) {
        tf.means = base_means;
        tf.scales = base_scales;
        return {base, tf};
    }

    MatrixXd squares = base.array().square();
    std::vector<std::string> square_names;
    square_names.reserve(columns.size());
    for (const auto& c : columns) square_names.push_back(c + "^2");
    VectorXd sq_means = VectorXd::Zero(d);
    VectorXd sq_scales = VectorXd::Ones(d);
    if (options.center_scale) scale_columns(squares, square_names, sq_means, sq_scales);

    MatrixXd out(n, 2 * d);
    out.leftCols(d) = base;
    out.rightCols(d) = squares;
    tf.columns.insert(tf.columns.end(), square_names.begin(), square_names.end());
    tf.means.resize(2 * d);
    tf.scales.resize(2 * d);
    tf.means << base_means, sq_means;
    tf.scales << base_scales, sq_scales;
    return {out, tf};
}

std::vector<double> mimic_table1_coefficients() {
    return {-0.74, -0.32, 0.22, -0.03, 0.67, -0.03, 0.54,
            0.03,  0.36,  0.01, 0.17,  -0.11, -0.13};
}

VectorXd mimic_preset_eta() {
    const auto c = mimic_table1_coefficients();
    VectorXd eta(12);
    // Intercept dropped; linear terms first, the squared terms after, to
    // match the standardize(add_squares) column layout.
    for (int v = 0; v < 6; ++v) {
        eta[v] = c[1 + 2 * v];
        eta[6 + v] = c[2 + 2 * v];
    }
    return eta;
}

MatrixXd builtin_sigma() {
    MatrixXd sigma(5, 5);
    sigma << 2.04, 1.54, 1.99, 1.19, 0.90,
             1.54, 1.62, 1.81, 1.30, 0.88,
             1.99, 1.81, 2.65, 1.66, 1.63,
             1.19, 1.30, 1.66, 1.53, 0.85,
             0.90, 0.88, 1.63, 0.85, 1.31;
    return sigma;
}

VectorXd builtin_eta() {
    VectorXd eta(5);
    eta << 7, 5, 10, 8, 3;
    return eta;
}

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

VectorXd parse_vector(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(where + " must be a nonempty array");
    VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ConfigError(where + " entries must be numbers");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

AssignmentRule parse_rule(const json& obj) {
    reject_unknown_keys(obj, {"kind", "delta", "delta_q", "p_mid"}, "rule");
    const std::string kind = obj.at("kind").get<std::string>();
    VectorXd placeholder;  // eta is attached at resolve time
    if (kind == "threshold") {
        AssignmentRule r;
        r.kind = AssignmentRule::Kind::Threshold;
        r.delta = obj.value("delta", 0.0);
        if (r.delta < 0.0) throw ConfigError("rule.delta must be >= 0");
        return r;
    }
    if (kind == "quantile") {
        AssignmentRule r;
        r.kind = AssignmentRule::Kind::Quantile;
        r.delta_q = obj.value("delta_q", 0.0);
        if (r.delta_q < 0.0 || r.delta_q > 0.5) throw ConfigError("rule.delta_q must lie in [0,1/2]");
        return r;
    }
    if (kind == "general_mid") {
        AssignmentRule r;
        r.kind = AssignmentRule::Kind::GeneralMid;
        r.delta = obj.value("delta", 0.0);
        r.p_mid = obj.value("p_mid", 0.5);
        if (r.delta < 0.0) throw ConfigError("rule.delta must be >= 0");
        if (r.p_mid < 0.0 || r.p_mid > 1.0) throw ConfigError("rule.p_mid must lie in [0,1]");
        return r;
    }
    throw ConfigError("rule.kind must be threshold, quantile, or general_mid");
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    reject_unknown_keys(doc,
                        {"eta", "rule", "constraints", "solver", "standardize", "seed",
                         "delta_grid", "strata_size", "probs_csv", "simulate", "svg"},
                        "config");

    RunConfig cfg;
    if (doc.contains("eta")) {
        if (doc["eta"].is_string()) {
            if (doc["eta"].get<std::string>() != "preset:mimic-table1") {
                throw ConfigError("unknown eta preset '" + doc["eta"].get<std::string>() + "'");
            }
            cfg.eta_is_mimic_preset = true;
            cfg.eta = mimic_preset_eta();
        } else {
            cfg.eta = parse_vector(doc["eta"], "eta");
        }
    }
    if (doc.contains("rule")) cfg.rule = parse_rule(doc["rule"]);
    if (doc.contains("constraints")) {
        const json& c = doc["constraints"];
        reject_unknown_keys(c, {"mu", "monotone", "rho"}, "constraints");
        if (c.contains("mu")) cfg.constraints.budget = c["mu"].get<double>();
        if (c.contains("monotone")) cfg.constraints.monotone = c["monotone"].get<bool>();
        if (c.contains("rho")) cfg.constraints.gain_fraction = c["rho"].get<double>();
        cfg.constraints.validate();
    }
    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        reject_unknown_keys(s,
                            {"tol_grad", "tol_step", "max_iter", "dykstra_max", "dykstra_tol",
                             "armijo_c", "armijo_shrink"},
                            "solver");
        cfg.solver.tol_grad = s.value("tol_grad", cfg.solver.tol_grad);
        cfg.solver.tol_step = s.value("tol_step", cfg.solver.tol_step);
        cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
        cfg.solver.dykstra_max = s.value("dykstra_max", cfg.solver.dykstra_max);
        cfg.solver.dykstra_tol = s.value("dykstra_tol", cfg.solver.dykstra_tol);
        cfg.solver.armijo_c = s.value("armijo_c", cfg.solver.armijo_c);
        cfg.solver.armijo_shrink = s.value("armijo_shrink", cfg.solver.armijo_shrink);
        cfg.solver.validate();
    }
    if (doc.contains("standardize")) {
        const json& s = doc["standardize"];
        reject_unknown_keys(s, {"center_scale", "add_squares"}, "standardize");
        cfg.standardize.center_scale = s.value("center_scale", false);
        cfg.standardize.add_squares = s.value("add_squares", false);
    }
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("delta_grid")) {
        const json& g = doc["delta_grid"];
        reject_unknown_keys(g, {"min", "max", "count"}, "delta_grid");
        DeltaGrid grid;
        grid.min = g.at("min").get<double>();
        grid.max = g.at("max").get<double>();
        grid.count = g.at("count").get<int>();
        if (grid.count < 2 || grid.max <= grid.min) {
            throw ConfigError("delta_grid needs count >= 2 and max > min");
        }
        cfg.delta_grid = grid;
    }
    if (doc.contains("strata_size")) {
        cfg.strata_size = doc["strata_size"].get<int>();
        if (*cfg.strata_size < 1) throw ConfigError("strata_size must be >= 1");
    }
    if (doc.contains("probs_csv")) cfg.probs_csv = doc["probs_csv"].get<std::string>();
    if (doc.contains("simulate")) {
        const json& s = doc["simulate"];
        reject_unknown_keys(s, {"scenario", "sigma", "eta", "n"}, "simulate");
        SimulateSpec spec;
        if (s.contains("scenario")) {
            spec.scenario = s["scenario"].get<std::string>();
            if (spec.scenario != "builtin") throw ConfigError("unknown simulate scenario");
        } else {
            if (!s.contains("sigma") || !s.contains("eta")) {
                throw ConfigError("simulate needs scenario=builtin or explicit sigma and eta");
            }
            const json& sig = s["sigma"];
            if (!sig.is_array() || sig.empty()) throw ConfigError("simulate.sigma must be a matrix");
            const std::size_t d = sig.size();
            MatrixXd sigma(d, d);
            for (std::size_t i = 0; i < d; ++i) {
                if (!sig[i].is_array() || sig[i].size() != d) {
                    throw ConfigError("simulate.sigma must be square");
                }
                for (std::size_t j = 0; j < d; ++j) sigma(i, j) = sig[i][j].get<double>();
            }
            spec.sigma = sigma;
            spec.eta = parse_vector(s["eta"], "simulate.eta");
        }
        spec.n = s.value("n", 500);
        if (spec.n < 1) throw ConfigError("simulate.n must be >= 1");
        cfg.simulate = spec;
    }
    if (doc.contains("svg")) cfg.svg = doc["svg"].get<bool>();
    return cfg;
}

namespace {

json resolved_config_json(const RunConfig& cfg, Eigen::Index d_resolved,
                          const std::optional<VectorXd>& eta_resolved) {
    json out;
    if (eta_resolved) {
        out["eta"] = std::vector<double>(eta_resolved->data(),
                                         eta_resolved->data() + eta_resolved->size());
        if (cfg.eta_is_mimic_preset) out["eta_preset"] = "preset:mimic-table1";
    }
    if (cfg.rule) {
        json r;
        switch (cfg.rule->kind) {
            case AssignmentRule::Kind::Threshold:
                r["kind"] = "threshold";
                r["delta"] = cfg.rule->delta;
                break;
            case AssignmentRule::Kind::Quantile:
                r["kind"] = "quantile";
                r["delta_q"] = cfg.rule->delta_q;
                break;
            case AssignmentRule::Kind::GeneralMid:
                r["kind"] = "general_mid";
                r["delta"] = cfg.rule->delta;
                r["p_mid"] = cfg.rule->p_mid;
                break;
        }
        out["rule"] = r;
    }
    json c;
    if (cfg.constraints.budget) c["mu"] = *cfg.constraints.budget;
    c["monotone"] = cfg.constraints.monotone;
    if (cfg.constraints.gain_fraction) c["rho"] = *cfg.constraints.gain_fraction;
    out["constraints"] = c;
    out["solver"] = {{"tol_grad", cfg.solver.tol_grad},
                     {"tol_step", cfg.solver.tol_step},
                     {"max_iter", cfg.solver.max_iter},
                     {"dykstra_max", cfg.solver.dykstra_max},
                     {"dykstra_tol", cfg.solver.dykstra_tol},
                     {"armijo_c", cfg.solver.armijo_c},
                     {"armijo_shrink", cfg.solver.armijo_shrink}};
    out["standardize"] = {{"center_scale", cfg.standardize.center_scale},
                          {"add_squares", cfg.standardize.add_squares}};
    out["seed"] = cfg.seed;
    out["columns_resolved"] = d_resolved;
    if (cfg.delta_grid) {
        out["delta_grid"] = {{"min", cfg.delta_grid->min},
                             {"max", cfg.delta_grid->max},
                             {"count", cfg.delta_grid->count}};
    }
    if (cfg.strata_size) out["strata_size"] = *cfg.strata_size;
    if (cfg.probs_csv) out["probs_csv"] = *cfg.probs_csv;
    out["svg"] = cfg.svg;
    return out;
}

VectorXd resolve_eta(const RunConfig& cfg, Eigen::Index d) {
    if (!cfg.eta) throw ConfigError("config requires an eta vector or preset");
    if (cfg.eta->size() != d) {
        throw ConfigError("eta has " + std::to_string(cfg.eta->size()) +
                          " entries but the (standardized) data has " + std::to_string(d) +
                          " columns");
    }
    return *cfg.eta;
}

json transform_json(const Transform& tf) {
    return {{"columns", tf.columns},
            {"means", std::vector<double>(tf.means.data(), tf.means.data() + tf.means.size())},
            {"scales", std::vector<double>(tf.scales.data(), tf.scales.data() + tf.scales.size())}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write " + path.string());
    out << text;
}

int count_levels(const VectorXd& p, double tol = 1e-4) {
    std::vector<double> v(p.data(), p.data() + p.size());
    std::sort(v.begin(), v.end());
    int levels = v.empty() ? 0 : 1;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] - v[i - 1] > tol) ++levels;
    }
    return levels;
}

json feasibility_json(const ConstraintSet& constraints, const VectorXd& p, const VectorXd& s) {
    json out;
    if (constraints.budget) out["mean_residual"] = std::abs(p.mean() - *constraints.budget);
    if (constraints.monotone) {
        const auto order = monotone_order(s);
        double violation = 0.0;
        for (std::size_t i = 1; i < order.size(); ++i) {
            violation = std::max(violation, p[order[i - 1]] - p[order[i]]);
        }
        out["monotone_violation"] = violation;
    }
    if (constraints.gain_fraction) {
        const double gain = (2.0 * p.array() - 1.0).matrix().dot(s);
        out["gain_slack"] = gain - *constraints.gain_fraction * s.cwiseAbs().sum();
    }
    return out;
}

std::string render_curve_svg(const TradeoffCurve& curve) {
    const double width = 640, height = 420, margin = 60;
    double dmin = 1e300, dmax = -1e300, emin = 1e300, emax = -1e300;
    for (const auto& pt : curve.points) {
        dmin = std::min(dmin, pt.delta);
        dmax = std::max(dmax, pt.delta);
        if (!pt.singular) {
            emin = std::min(emin, pt.log_efficiency);
            emax = std::max(emax, pt.log_efficiency);
        }
    }
    if (dmax <= dmin) dmax = dmin + 1.0;
    if (emax <= emin) emax = emin + 1.0;
    auto x_of = [&](double d) { return margin + (d - dmin) / (dmax - dmin) * (width - 2 * margin); };
    auto y_eff = [&](double e) {
        return height - margin - (e - emin) / (emax - emin) * (height - 2 * margin);
    };
    auto y_gain = [&](double g) {  // gain_normalized in [-1, 1]
        return height - margin - (g + 1.0) / 2.0 * (height - 2 * margin);
    };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
        << "' y2='" << height - margin << "' stroke='black'/>\n";
    svg << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << height - margin << "' stroke='black'/>\n";
    svg << "<line x1='" << width - margin << "' y1='" << margin << "' x2='" << width - margin
        << "' y2='" << height - margin << "' stroke='black'/>\n";
    auto polyline = [&](const std::string& color, bool gain_axis) {
        svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (const auto& pt : curve.points) {
            if (!gain_axis && pt.singular) continue;
            const double y = gain_axis ? y_gain(pt.gain_normalized) : y_eff(pt.log_efficiency);
            svg << x_of(pt.delta) << "," << y << " ";
        }
        svg << "'/>\n";
    };
    polyline("steelblue", false);
    polyline("firebrick", true);
    svg << "<text x='" << width / 2 << "' y='" << height - margin / 3
        << "' text-anchor='middle'>delta</text>\n";
    svg << "<text x='" << margin / 3 << "' y='" << margin / 2
        << "' fill='steelblue'>log efficiency</text>\n";
    svg << "<text x='" << width - margin << "' y='" << margin / 2
        << "' text-anchor='end' fill='firebrick'>normalized gain</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

struct ResolvedProblem {
    DesignProblem problem;
    Transform transform;
    VectorXd eta;
};

ResolvedProblem resolve_problem(const RunConfig& cfg, const Dataset& data) {
    auto [X, tf] = standardize(data.X, data.columns, cfg.standardize);
    VectorXd eta = resolve_eta(cfg, X.cols());
    return {DesignProblem(std::move(X), eta), std::move(tf), eta};
}

}  // namespace

int cmd_solve(const RunConfig& config, const Dataset& data,
              const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ResolvedProblem rp = resolve_problem(config, data);
    const VectorXd s = rp.problem.running();

    const SolverReport report = solve(rp.problem, config.constraints, config.solver);
    const VectorXd& p = report.p_opt.p();

    std::ostringstream csv;
    csv << "id,running,p\n";
    for (int i = 0; i < rp.problem.n(); ++i) {
        csv << data.ids[i] << ',' << format_double(s[i]) << ',' << format_double(p[i]) << '\n';
    }
    write_text(out_dir / "probs.csv", csv.str());

    json rep;
    rep["command"] = "solve";
    rep["objective"] = report.objective;
    rep["iterations"] = report.iterations;
    rep["converged"] = report.converged;
    rep["kkt_residual"] = report.kkt_residual;
    rep["ridged"] = report.ridged;
    rep["active_constraints"] = report.active_constraints;
    rep["feasibility"] = feasibility_json(config.constraints, p, s);
    rep["level_count"] = count_levels(p);
    rep["seed"] = config.seed;
    rep["transform"] = transform_json(rp.transform);
    rep["config"] = resolved_config_json(config, rp.problem.d(), rp.eta);
    write_text(out_dir / "report.json", rep.dump(2) + "\n");
    return 0;
}

int cmd_curve(const RunConfig& config, const Dataset& data,
              const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (!config.rule) throw ConfigError("curve requires a rule");
    if (!config.delta_grid) throw ConfigError("curve requires a delta_grid");
    ResolvedProblem rp = resolve_problem(config, data);

    AssignmentRule family = *config.rule;
    family.eta = rp.eta;
    std::vector<double> grid(config.delta_grid->count);
    for (int i = 0; i < config.delta_grid->count; ++i) {
        grid[i] = config.delta_grid->min +
                  (config.delta_grid->max - config.delta_grid->min) * i /
                      (config.delta_grid->count - 1);
    }
    const TradeoffCurve curve = empirical_curve(rp.problem, family, grid);

    std::ostringstream csv;
    csv << "delta,log_efficiency,gain,gain_normalized,status\n";
    for (const auto& pt : curve.points) {
        csv << format_double(pt.delta) << ',' << format_double(pt.log_efficiency) << ','
            << format_double(pt.gain) << ',' << format_double(pt.gain_normalized) << ','
            << (pt.singular ? "singular" : "ok") << '\n';
    }
    write_text(out_dir / "curve.csv", csv.str());
    if (config.svg) write_text(out_dir / "curve.svg", render_curve_svg(curve));

    json rep;
    rep["command"] = "curve";
    rep["rule"] = curve.rule;
    rep["n"] = curve.n;
    rep["d"] = curve.d;
    rep["centering"] = std::vector<double>(curve.centering.data(),
                                           curve.centering.data() + curve.centering.size());
    rep["seed"] = config.seed;
    rep["transform"] = transform_json(rp.transform);
    rep["config"] = resolved_config_json(config, rp.problem.d(), rp.eta);
    write_text(out_dir / "report.json", rep.dump(2) + "\n");
    return 0;
}

int cmd_assign(const RunConfig& config, const Dataset& data,
               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> ids;
    VectorXd p;
    if (config.probs_csv) {
        const Dataset probs = ingest(config.probs_csv.value());
        auto it = std::find(probs.columns.begin(), probs.columns.end(), "p");
        if (it == probs.columns.end()) {
            throw IngestError("probs file must contain a `p` column");
        }
        const auto col = static_cast<Eigen::Index>(it - probs.columns.begin());
        ids = probs.ids;
        p = probs.X.col(col);
        if (!data.ids.empty() && data.ids != probs.ids) {
            throw IngestError("probs.csv ids do not match the dataset ids");
        }
    } else {
        if (!config.rule) throw ConfigError("assign requires a rule or probs_csv");
        if (data.ids.empty()) throw ConfigError("assign with a rule requires --data");
        ResolvedProblem rp = resolve_problem(config, data);
        AssignmentRule rule = *config.rule;
        rule.eta = rp.eta;
        ids = data.ids;
        p = rule_probabilities(rule, rp.problem.X()).p();
    }

    const ProbabilityVector probs(p);
    VectorXi z;
    if (config.strata_size) {
        std::vector<std::vector<int>> strata;
        for (int start = 0; start < probs.size(); start += *config.strata_size) {
            std::vector<int> stratum;
            for (int i = start; i < std::min(probs.size(), start + *config.strata_size); ++i) {
                stratum.push_back(i);
            }
            strata.push_back(std::move(stratum));
        }
        z = stratified_assignment(probs, strata, config.seed);
    } else {
        z = sample_assignment(probs, config.seed);
    }

    std::ostringstream csv;
    csv << "id,p,z\n";
    for (int i = 0; i < probs.size(); ++i) {
        csv << ids[i] << ',' << format_double(p[i]) << ',' << z[i] << '\n';
    }
    write_text(out_dir / "assignments.csv", csv.str());
    return 0;
}

int cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (!config.simulate) throw ConfigError("simulate requires a simulate block");
    const SimulateSpec& spec = *config.simulate;

    MatrixXd sigma;
    VectorXd eta;
    std::string eta_note;
    if (spec.scenario == "builtin") {
        sigma = builtin_sigma();
        eta = builtin_eta();
        eta_note =
            "reference scenario lists six eta entries for five covariates; "
            "the first five are used";
    } else {
        sigma = *spec.sigma;
        eta = *spec.eta;
        Eigen::LLT<MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) {
            throw InvalidArgument("simulate: sigma must be positive definite");
        }
    }

    const MatrixXd X = sample_gaussian(sigma, spec.n, config.seed);
    Dataset data;
    data.X = X;
    for (int i = 0; i < spec.n; ++i) data.ids.push_back(std::to_string(i + 1));
    for (int j = 0; j < sigma.rows(); ++j) data.columns.push_back("x" + std::to_string(j + 1));

    std::ostringstream csv;
    csv << "id";
    for (const auto& c : data.columns) csv << ',' << c;
    csv << '\n';
    for (int i = 0; i < spec.n; ++i) {
        csv << data.ids[i];
        for (int j = 0; j < X.cols(); ++j) csv << ',' << format_double(X(i, j));
        csv << '\n';
    }
    write_text(out_dir / "dataset.csv", csv.str());

    RunConfig inner = config;
    inner.eta = eta;
    inner.eta_is_mimic_preset = false;
    inner.simulate.reset();
    cmd_solve(inner, data, out_dir);
    json solve_report = json::parse(std::ifstream(out_dir / "report.json"));

    if (!inner.rule) inner.rule = AssignmentRule::threshold(0.0, eta);
    if (!inner.delta_grid) {
        const VectorXd s = X * eta;
        DeltaGrid grid;
        grid.min = 0.0;
        grid.max = 1.1 * s.cwiseAbs().maxCoeff();
        grid.count = 25;
        inner.delta_grid = grid;
    }
    cmd_curve(inner, data, out_dir);
    json curve_report = json::parse(std::ifstream(out_dir / "report.json"));

    json rep;
    rep["command"] = "simulate";
    rep["simulate"] = {{"scenario", spec.scenario.empty() ? "custom" : spec.scenario},
                       {"n", spec.n}};
    if (!eta_note.empty()) rep["eta_note"] = eta_note;
    rep["solve"] = solve_report;
    rep["curve"] = curve_report;
    write_text(out_dir / "report.json", rep.dump(2) + "\n");
    return 0;
}

}  // namespace tiebreak::io
