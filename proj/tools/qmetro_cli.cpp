// Command-line front end: analyze a pure-state model, construct an optimal
// measurement, verify it by Monte Carlo, sweep the radar trade-off, or run
// the brute-force search. Reports are deterministic JSON keyed by the seed.

#include "qmetro/qmetro.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
using namespace qmetro;

namespace {

constexpr int kSchemaVersion = 1;

// exit codes: 0 ok, 2 parse, 3 singular information, 4 non-convergence,
// 5 validation/domain
enum ExitCode {
    kOk = 0,
    kFailure = 1,
    kParse = 2,
    kSingular = 3,
    kNoConvergence = 4,
    kValidation = 5,
};

json to_json(const RealMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const RealVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(row);
    }
    return rows;
}

ComplexMatrix complex_matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("expected a non-empty complex matrix");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    ComplexMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k)
            m(i, k) = Complex(j[i][k][0].get<double>(), j[i][k][1].get<double>());
    return m;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParseError("could not parse number '" + item + "'");
        }
    }
    if (out.empty()) throw ParseError("empty numeric list");
    return out;
}

struct ModelSpec {
    std::string descriptor;  // as given on the command line
    PureStateModel model;
};

// --model accepts either a path to an explicit-model JSON file or
// builtin:NAME with optional ?key=value&key=value parameters.
ModelSpec resolve_model(const std::string& spec, std::optional<int> grid_n,
                        std::optional<double> grid_w) {
    ModelSpec out;
    out.descriptor = spec;
    if (spec.rfind("builtin:", 0) == 0) {
        std::string rest = spec.substr(8);
        BuiltinParams params;
        const auto qpos = rest.find('?');
        std::string name = rest.substr(0, qpos);
        if (qpos != std::string::npos) {
            std::stringstream ss(rest.substr(qpos + 1));
            std::string kv;
            while (std::getline(ss, kv, '&')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw ParseError("builtin parameter '" + kv + "' is not key=value");
                try {
                    params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
                } catch (const std::exception&) {
                    throw ParseError("builtin parameter '" + kv + "' has a non-numeric value");
                }
            }
        }
        if (name == "radar_biphoton") {
            if (grid_n) params.emplace("grid_n", static_cast<double>(*grid_n));
            if (grid_w) params.emplace("grid_w", *grid_w);
        }
        try {
            out.model = builtin_model(name, params);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what());
        }
        return out;
    }
    out.model = load_model_file(spec);
    return out;
}

RealVector resolve_point(const PureStateModel& model, const std::string& point_flag) {
    if (point_flag.empty()) {
        if (model.reference_point.size() != model.n)
            throw ParseError("--point is required for this model");
        return model.reference_point;
    }
    const auto values = parse_double_list(point_flag);
    if (static_cast<int>(values.size()) != model.n)
        throw ParseError("--point needs " + std::to_string(model.n) + " values, got " +
                         std::to_string(values.size()));
    RealVector x(model.n);
    for (int i = 0; i < model.n; ++i) x[i] = values[i];
    return x;
}

json tolerances_json() {
    return json({{"probability_cutoff", tol::probability_cutoff},
                 {"residual_certificate", tol::residual_certificate},
                 {"basis_orthogonality", tol::basis_orthogonality},
                 {"zero_entry", tol::zero_entry},
                 {"weak_commutativity", tol::weak_commutativity}});
}

json information_json(const InformationBundle& bundle) {
    const auto report = tradeoff_bound(bundle);
    json j;
    j["f_q"] = to_json(bundle.f_q);
    j["f_im"] = to_json(bundle.f_im);
    j["lambda_abs"] = to_json(bundle.lambda_abs);
    j["gamma_bound"] = report.gamma_bound;
    j["per_mode_penalty"] = to_json(report.per_mode_penalty);
    j["gill_massar_constant"] = report.gill_massar_constant;
    j["weak_commutativity"] = report.weak_commutativity;
    return j;
}

json model_json(const ModelSpec& spec, const RealVector& point) {
    json j;
    j["descriptor"] = spec.descriptor;
    j["d"] = spec.model.d;
    j["n"] = spec.model.n;
    j["labels"] = spec.model.labels;
    j["point"] = to_json(point);
    return j;
}

json plan_json(const MeasurementPlan& plan, bool include_basis) {
    json j;
    j["probabilities"] = to_json(plan.probabilities);
    j["amplitudes"] = to_json(plan.amplitudes);
    j["estimator_coefficients"] = to_json(plan.estimator_f);
    j["f_c"] = to_json(plan.f_c);
    j["gamma_achieved"] = plan.gamma_achieved;
    j["gamma_bound"] = plan.gamma_bound;
    j["residual"] = plan.residual;
    j["objective_tilde"] = plan.objective_tilde;
    j["eps_sq"] = to_json(plan.eps_sq);
    j["eps_sq_tilde"] = to_json(plan.eps_sq_tilde);
    j["b_matrix"] = to_json(plan.b_matrix);
    j["constrained_cols"] = plan.constrained_cols;
    j["rank_dropped"] = plan.rank_dropped;
    if (include_basis) j["basis"] = to_json(plan.outcome_bras);
    return j;
}

void emit(const json& report, const std::string& out_path) {
    const std::string text = report.dump(2) + "\n";
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw ValidationError("cannot write to '" + out_path + "'");
        f << text;
    }
    std::cout << text;
}

struct CommonFlags {
    std::string model_spec;
    std::string point;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool timing = false;
    int ancilla_dim = 1;
    std::optional<int> grid_n;
    std::optional<double> grid_w;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool need_model = true) {
    auto* model_opt = cmd->add_option("--model", flags.model_spec,
                                      "model file path or builtin:NAME[?key=value&...]");
    if (need_model) model_opt->required();
    cmd->add_option("--point", flags.point, "parameter point v1,v2,... (default: model reference)");
    cmd->add_option("--out", flags.out_path, "write the report to this path as well");
    cmd->add_option("--seed", flags.seed, "seed for all randomized stages")
        ->each([&flags](const std::string&) { flags.seed_given = true; });
    cmd->add_flag("--timing", flags.timing, "include wall-clock timing in the report");
    cmd->add_option("--ancilla-dim", flags.ancilla_dim,
                    "attach an ancilla of this dimension in state |0>");
    int grid_n = 0;
    double grid_w = 0;
    cmd->add_option("--grid-n", grid_n, "radar grid points per axis")
        ->each([&flags, &grid_n](const std::string&) { flags.grid_n = grid_n; });
    cmd->add_option("--grid-w", grid_w, "radar window half-width in units of 1/sigma")
        ->each([&flags, &grid_w](const std::string&) { flags.grid_w = grid_w; });
}

ModelSpec resolve_model(const CommonFlags& flags) {
    ModelSpec spec = resolve_model(flags.model_spec, flags.grid_n, flags.grid_w);
    if (flags.ancilla_dim > 1) {
        AncillaSpec anc;
        anc.dim = flags.ancilla_dim;
        anc.xi = ComplexVector::Zero(flags.ancilla_dim);
        anc.xi[0] = 1.0;
        spec.model = augment(spec.model, anc);
        spec.descriptor += "+ancilla" + std::to_string(flags.ancilla_dim);
    }
    return spec;
}

std::uint64_t settle_seed(CommonFlags& flags, json& report) {
    if (!flags.seed_given) {
        flags.seed = std::random_device{}();
        report["seed_generated"] = true;
    }
    report["seed"] = flags.seed;
    return flags.seed;
}

class Stopwatch {
  public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
    }

  private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"incompatibility trade-off bounds and optimal measurements for pure-state models"};
    app.require_subcommand(1);

    // ---- analyze ----
    CommonFlags an;
    auto* analyze = app.add_subcommand("analyze", "information matrices and the trade-off bound");
    add_common(analyze, an);

    // ---- measure ----
    CommonFlags me;
    int me_restarts = 16;
    std::string me_shape;
    auto* measure = app.add_subcommand("measure", "construct an optimal projective measurement");
    add_common(measure, me);
    measure->add_option("--restarts", me_restarts, "rotation-search restarts");
    measure->add_option("--shape-probs", me_shape,
                        "target outcome probabilities p1,p2,... or 'uniform'");

    // ---- verify ----
    CommonFlags ve;
    long ve_shots = 100000;
    int ve_trials = 1000;
    std::string ve_plan;
    auto* verify = app.add_subcommand("verify", "Monte Carlo check of a measurement plan");
    add_common(verify, ve);
    verify->add_option("--plan", ve_plan, "report written by 'measure' (otherwise built inline)");
    verify->add_option("--shots", ve_shots, "shots per trial");
    verify->add_option("--trials", ve_trials, "number of independent estimates");

    // ---- radar-sweep ----
    CommonFlags rs;
    std::string rs_kappas = "0:0.9:10";
    auto* sweep = app.add_subcommand("radar-sweep", "trade-off sweep over the biphoton correlation");
    add_common(sweep, rs, /*need_model=*/false);
    sweep->add_option("--kappas", rs_kappas, "start:stop:count or a single value");

    // ---- oracle ----
    CommonFlags orc;
    int orc_restarts = 8;
    bool orc_allow_large = false;
    bool orc_compress = false;
    auto* oracle = app.add_subcommand("oracle", "brute-force lower bound on the trade-off metric");
    add_common(oracle, orc);
    oracle->add_option("--restarts", orc_restarts, "ascent restarts");
    oracle->add_flag("--allow-large", orc_allow_large, "lift the dimension guard");
    oracle->add_flag("--compress", orc_compress,
                     "search on the state+SLD span instead of the full space");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParse;
    }
    Stopwatch watch;

    if (*analyze) {
        json report;
        report["schema_version"] = kSchemaVersion;
        report["command"] = "analyze";
        settle_seed(an, report);
        const auto spec = resolve_model(an);
        const RealVector x = resolve_point(spec.model, an.point);
        const auto bundle = information_at(spec.model, x);
        report["model"] = model_json(spec, x);
        report["information"] = information_json(bundle);
        report["tolerances"] = tolerances_json();
        if (an.timing) report["timing_ms"] = watch.ms();
        emit(report, an.out_path);
        return kOk;
    }

    if (*measure) {
        json report;
        report["schema_version"] = kSchemaVersion;
        report["command"] = "measure";
        const std::uint64_t seed = settle_seed(me, report);
        const auto spec = resolve_model(me);
        const RealVector x = resolve_point(spec.model, me.point);
        const auto bundle = information_at(spec.model, x);

        MeasurementConfig config;
        config.seed = seed;
        config.rotation.restarts = me_restarts;
        if (!me_shape.empty()) {
            // the working space has dim(span{psi, l_j}) outcomes
            const auto probe = optimal_rotation(bundle, [&] {
                RotationConfig rc;
                rc.seed = seed;
                rc.restarts = me_restarts;
                return rc;
            }());
            const int s = static_cast<int>(probe.working_basis.cols());
            RealVector target(s);
            if (me_shape == "uniform") {
                target.setConstant(1.0 / s);
            } else {
                const auto values = parse_double_list(me_shape);
                if (static_cast<int>(values.size()) != s)
                    throw ValidationError("--shape-probs needs " + std::to_string(s) +
                                          " values for this model (working-space outcomes)");
                for (int i = 0; i < s; ++i) target[i] = values[i];
            }
            config.b_policy = BPolicy::shaped(target);
        }
        const auto plan = design_measurement(bundle, config);
        report["model"] = model_json(spec, x);
        report["information"] = information_json(bundle);
        report["plan"] = plan_json(plan, /*include_basis=*/true);
        report["tolerances"] = tolerances_json();
        if (me.timing) report["timing_ms"] = watch.ms();
        emit(report, me.out_path);
        return kOk;
    }

    if (*verify) {
        json report;
        report["schema_version"] = kSchemaVersion;
        report["command"] = "verify";
        const std::uint64_t seed = settle_seed(ve, report);
        const auto spec = resolve_model(ve);
        const RealVector x = resolve_point(spec.model, ve.point);

        ComplexMatrix outcome_bras;
        if (!ve_plan.empty()) {
            std::ifstream in(ve_plan);
            if (!in) throw ParseError("cannot open plan file '" + ve_plan + "'");
            json plan_doc;
            try {
                in >> plan_doc;
            } catch (const json::parse_error& e) {
                throw ParseError(std::string("plan file: ") + e.what());
            }
            if (!plan_doc.contains("plan") || !plan_doc["plan"].contains("basis"))
                throw ParseError("plan file lacks plan.basis");
            outcome_bras = complex_matrix_from_json(plan_doc["plan"]["basis"]);
            if (outcome_bras.cols() != spec.model.d)
                throw ValidationError("plan basis dimension does not match the model");
        } else {
            const auto bundle = information_at(spec.model, x);
            MeasurementConfig config;
            config.seed = seed;
            outcome_bras = design_measurement(bundle, config).outcome_bras;
        }

        if (ve_shots < 10000) {
            std::cerr << "warning: shots < 1e4; the asymptotic comparison may be unreliable\n";
            report["warning"] = "shots below 1e4: asymptotic regime not reached";
        }
        SimulationConfig sim_config;
        sim_config.seed = seed;
        sim_config.trials = ve_trials;
        const auto sim = simulate_estimation(outcome_bras, spec.model, x, ve_shots, sim_config);

        json mc;
        mc["shots"] = sim.shots;
        mc["trials"] = sim.trials;
        mc["covariance"] = to_json(sim.covariance);
        mc["expected_covariance"] = to_json(sim.expected);
        mc["mean_estimate"] = to_json(sim.mean);
        mc["f_c"] = to_json(sim.fc_truth);
        mc["gamma_estimate"] = sim.gamma_estimate;
        const double gamma_ref = sim.fq_truth.ldlt().solve(sim.fc_truth).trace();
        mc["gamma_reference"] = gamma_ref;
        mc["gamma_relative_deviation"] = std::abs(sim.gamma_estimate - gamma_ref) /
                                         std::max(1e-300, std::abs(gamma_ref));
        report["model"] = model_json(spec, x);
        report["monte_carlo"] = mc;
        report["tolerances"] = tolerances_json();
        if (ve.timing) report["timing_ms"] = watch.ms();
        emit(report, ve.out_path);
        return kOk;
    }

    if (*sweep) {
        const auto kappas = parse_kappa_spec(rs_kappas);
        for (const double k : kappas)
            if (!(k >= 0.0 && k < 1.0))
                throw ValidationError("kappa sweep: values must lie in [0, 1)");
        TimeGrid grid;
        if (rs.grid_n) grid.n_t = *rs.grid_n;
        if (rs.grid_w) grid.w = *rs.grid_w;
        MeasurementConfig config;
        json dummy;
        config.seed = settle_seed(rs, dummy);
        const auto rows = kappa_sweep(kappas, grid, config);
        if (!rs.out_path.empty()) {
            std::ofstream f(rs.out_path);
            if (!f) throw ValidationError("cannot write to '" + rs.out_path + "'");
            write_sweep_csv(rows, f);
        }
        write_sweep_csv(rows, std::cout);
        return kOk;
    }

    if (*oracle) {
        json report;
        report["schema_version"] = kSchemaVersion;
        report["command"] = "oracle";
        const std::uint64_t seed = settle_seed(orc, report);
        auto spec = resolve_model(orc);
        RealVector x = resolve_point(spec.model, orc.point);
        const auto bundle = information_at(spec.model, x);
        const auto bound_report = tradeoff_bound(bundle);

        PureStateModel search_model = spec.model;
        RealVector search_x = x;
        if (orc_compress) {
            // compress onto the span of the state and the SLD vectors; the
            // trade-off metric is unchanged there
            std::vector<ComplexVector> span{bundle.psi};
            for (const auto& l : bundle.sld) span.push_back(l);
            const auto gs = gram_schmidt(span);
            const int s = static_cast<int>(gs.basis.size());
            ComplexMatrix basis(spec.model.d, s);
            for (int kk = 0; kk < s; ++kk) basis.col(kk) = gs.basis[kk];
            const auto ev = evaluate_with_derivatives(spec.model, x);
            ComplexVector psi_c = basis.adjoint() * ev.psi;
            std::vector<ComplexVector> dpsi_c;
            for (const auto& dp : ev.dpsi) dpsi_c.push_back(ComplexVector(basis.adjoint() * dp));
            search_model = explicit_model(psi_c, dpsi_c, x);
            search_x = x;
        }
        BruteForceConfig config;
        config.seed = seed;
        config.restarts = orc_restarts;
        if (orc_allow_large) config.dimension_limit = search_model.d;
        const auto result = brute_force_gamma(search_model, search_x, config);

        json bf;
        bf["best_gamma"] = result.best_gamma;
        bf["gamma_bound"] = bound_report.gamma_bound;
        bf["gap"] = bound_report.gamma_bound - result.best_gamma;
        bf["restarts"] = orc_restarts;
        bf["compressed"] = orc_compress;
        bf["search_dimension"] = search_model.d;
        report["model"] = model_json(spec, x);
        report["information"] = information_json(bundle);
        report["brute_force"] = bf;
        report["tolerances"] = tolerances_json();
        if (orc.timing) report["timing_ms"] = watch.ms();
        emit(report, orc.out_path);
        return kOk;
    }

    return kFailure;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const SingularInformationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSingular;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (best residual " << e.best_residual << ")\n";
        return kNoConvergence;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
