// SPDX-License-Identifier: Apache-2.0
#include "lhsz/cli.hpp"

#include "lhsz/errors.hpp"
#include "lhsz/harness.hpp"
#include "lhsz/io.hpp"
#include "lhsz/models.hpp"
#include "lhsz/parallel.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <ostream>

namespace lhsz::cli {

namespace fs = std::filesystem;

namespace {

std::size_t parse_count(std::string_view s, std::string_view what) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(ErrorKind::invalid_argument, "malformed " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

Eigen::VectorXd parse_vector(std::string_view s) {
    std::vector<double> vals;
    for (auto part : split(s, ',')) {
        double v = 0.0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || res.ec != std::errc() || res.ptr != part.data() + part.size()) {
            throw Error(ErrorKind::invalid_argument, "malformed --theta0 component '" + std::string(part) + "'");
        }
        vals.push_back(v);
    }
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::vector<Method> parse_methods(std::string_view s) {
    std::vector<Method> out;
    for (auto part : split(s, ',')) out.push_back(parse_method(part));
    return out;
}

Standardization parse_standardization(std::string_view s) {
    if (s == "oracle") return Standardization::oracle;
    if (s == "empirical") return Standardization::empirical;
    throw Error(ErrorKind::invalid_argument, "--standardization must be 'oracle' or 'empirical'");
}

void configure_threads(std::size_t threads) {
    if (threads > 0) {
        set_worker_count(threads);
        return;
    }
    if (const char* env = std::getenv("LHS_ZEST_THREADS")) {
        set_worker_count(parse_count(env, "LHS_ZEST_THREADS"));
    }
}

fs::path parent_or_cwd(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

struct Options {
    std::size_t threads = 0;
    std::uint64_t seed = 0;
    std::string method = "lhs";
    std::size_t n = 0;
    std::size_t d = 0;
    std::string out;
    std::string outdir;
    std::string field;
    std::size_t outer = 100000;
    std::size_t bins = 64;
    std::size_t inner = 2048;
    std::string design_file;
    bool stratify_aux = false;
    std::string model;
    std::string theta0;
    bool no_lhs_sandwich = false;
    std::string dataset_out;
    double tol = 1e-10;
    std::size_t max_iter = 100;
    std::string methods = "lhs,iid";
    std::string sizes;
    std::size_t reps = 0;
    std::size_t oracle_budget = 0;
    std::string standardization = "oracle";
};

}  // namespace

std::vector<std::size_t> parse_range(std::string_view text) {
    if (text.empty()) throw Error(ErrorKind::invalid_argument, "empty range");
    std::vector<std::size_t> out;
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw Error(ErrorKind::invalid_argument, "range must be start:stop:step");
        const std::size_t start = parse_count(parts[0], "range start");
        const std::size_t stop = parse_count(parts[1], "range stop");
        const std::size_t step = parse_count(parts[2], "range step");
        if (step == 0) throw Error(ErrorKind::invalid_argument, "range step must be positive");
        if (start > stop) throw Error(ErrorKind::invalid_argument, "range start exceeds stop");
        for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
    } else {
        for (auto part : split(text, ',')) out.push_back(parse_count(part, "size"));
    }
    return out;
}

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"lhsz: Latin hypercube sampling, additive variance decomposition and Z-estimation"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("--threads", o.threads, "worker threads (default: LHS_ZEST_THREADS or all cores)");

    const auto positive = CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max());

    auto* sample = app.add_subcommand("sample", "generate a design and write it as CSV");
    sample->add_option("--method", o.method, "lhs or iid")->required()->check(CLI::IsMember({"lhs", "iid"}));
    sample->add_option("--n", o.n, "sample size")->required()->check(positive);
    sample->add_option("--d", o.d, "input dimension")->required()->check(positive);
    sample->add_option("--seed", o.seed, "master seed")->required();
    sample->add_option("--out", o.out, "output CSV")->required();

    auto* decompose = app.add_subcommand("decompose", "additive decomposition and remainder covariance of a field");
    decompose->add_option("--field", o.field, "built-in field")->required()->check(CLI::IsMember(field_names()));
    decompose->add_option("--outer", o.outer, "outer Monte Carlo points")->check(CLI::Range(std::size_t{100}, std::numeric_limits<std::size_t>::max()));
    decompose->add_option("--bins", o.bins, "main-effect bins")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    decompose->add_option("--inner", o.inner, "inner samples per bin")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    decompose->add_option("--seed", o.seed, "master seed")->required();
    decompose->add_option("--out", o.out, "output JSON")->required();
    decompose->add_option("--design-file", o.design_file, "design CSV to average the field over");
    decompose->add_flag("--stratify-aux", o.stratify_aux, "treat the auxiliary uniform as a structural coordinate");

    auto* fit = app.add_subcommand("fit", "solve a built-in Z-estimation problem on one synthetic dataset");
    fit->add_option("--model", o.model, "built-in model")->required()->check(CLI::IsMember(model_names()));
    fit->add_option("--method", o.method, "lhs or iid")->check(CLI::IsMember({"lhs", "iid"}));
    fit->add_option("--n", o.n, "sample size")->required()->check(positive);
    fit->add_option("--seed", o.seed, "master seed")->required();
    fit->add_option("--theta0", o.theta0, "comma-separated truth used to generate responses");
    fit->add_option("--out", o.out, "output JSON")->required();
    fit->add_option("--dataset-out", o.dataset_out, "also write the dataset as CSV (x1..xd,z)");
    fit->add_flag("--no-lhs-sandwich", o.no_lhs_sandwich, "skip the remainder covariance and LHS sandwich");
    fit->add_option("--outer", o.outer, "outer points for the remainder covariance")->check(CLI::Range(std::size_t{100}, std::numeric_limits<std::size_t>::max()));
    fit->add_option("--bins", o.bins, "main-effect bins")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    fit->add_option("--inner", o.inner, "inner samples per bin")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    fit->add_option("--tol", o.tol, "tolerance on ||Psi_n||")->check(CLI::PositiveNumber);
    fit->add_option("--max-iter", o.max_iter, "Newton iteration cap")->check(positive);
    fit->add_flag("--stratify-aux", o.stratify_aux, "draw response uniforms as an extra design column");

    auto* experiment = app.add_subcommand("experiment", "replicated LHS vs IID sweep with oracle and Q-Q tables");
    experiment->add_option("--model", o.model, "built-in model")->required()->check(CLI::IsMember(model_names()));
    experiment->add_option("--methods", o.methods, "comma list of lhs,iid");
    experiment->add_option("--sizes", o.sizes, "start:stop:step or comma list")->required();
    experiment->add_option("--reps", o.reps, "replications per cell")->required()->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    experiment->add_option("--seed", o.seed, "master seed")->required();
    experiment->add_option("--outdir", o.outdir, "output directory")->required();
    experiment->add_option("--oracle-budget", o.oracle_budget, "outer points for the asymptotic oracle (default max(1e5, max size))");
    experiment->add_option("--bins", o.bins, "main-effect bins for the oracle")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    experiment->add_option("--inner", o.inner, "inner samples per bin for the oracle")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    experiment->add_flag("--stratify-aux", o.stratify_aux, "draw response uniforms as an extra design column");

    auto* qq = app.add_subcommand("qq", "Q-Q table of standardized estimates");
    qq->add_option("--model", o.model, "built-in model")->required()->check(CLI::IsMember(model_names()));
    qq->add_option("--method", o.method, "lhs or iid")->check(CLI::IsMember({"lhs", "iid"}));
    qq->add_option("--n", o.n, "sample size")->required()->check(positive);
    qq->add_option("--reps", o.reps, "replications")->required()->check(CLI::Range(std::size_t{50}, std::numeric_limits<std::size_t>::max()));
    qq->add_option("--seed", o.seed, "master seed")->required();
    qq->add_option("--standardization", o.standardization, "oracle or empirical")->check(CLI::IsMember({"oracle", "empirical"}));
    qq->add_option("--oracle-budget", o.oracle_budget, "outer points for the oracle (default 1e5)");
    qq->add_option("--bins", o.bins, "main-effect bins for the oracle")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    qq->add_option("--inner", o.inner, "inner samples per bin for the oracle")->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    qq->add_option("--out", o.out, "output CSV")->required();
    qq->add_flag("--stratify-aux", o.stratify_aux, "draw response uniforms as an extra design column");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    RunManifest manifest;
    manifest.started = std::chrono::system_clock::now();
    for (int i = 1; i < argc; ++i) manifest.arguments.emplace_back(argv[i]);
    manifest.seed = o.seed;

    try {
        configure_threads(o.threads);
        fs::path manifest_dir;

        if (sample->parsed()) {
            manifest.command = "sample";
            const auto design = generate(parse_method(o.method), o.n, o.d, StreamKey{o.seed, 0, 0, Purpose::permutation});
            write_design_csv(design, o.out);
            manifest.outputs.push_back(o.out);
            manifest_dir = parent_or_cwd(o.out);
            out << "wrote " << design.n() << " x " << design.d() << " " << to_string(design.method()) << " design to "
                << o.out << "\n";
        } else if (decompose->parsed()) {
            manifest.command = "decompose";
            VectorField f = builtin_field(o.field);
            if (o.stratify_aux) f = promote_auxiliary(f);
            const auto rep = remainder_covariance(f, o.outer, o.bins, o.inner, StreamKey{o.seed, 0, 0, Purpose::oracle});
            nlohmann::json j = to_json(rep);
            j["field"] = o.field;
            j["settings"] = {{"outer", o.outer}, {"bins", o.bins},  {"inner", o.inner},
                             {"seed", o.seed},   {"stratify_aux", o.stratify_aux}};
            if (!o.design_file.empty()) {
                const auto design = read_design_csv(o.design_file);
                if (design.d() != f.d) {
                    throw Error(ErrorKind::invalid_argument, "--design-file has " + std::to_string(design.d()) +
                                                                 " columns but field '" + o.field + "' needs " +
                                                                 std::to_string(f.d));
                }
                std::vector<double> aux(design.n(), 0.0);
                if (f.uses_auxiliary && design.n() > 0) {
                    aux = uniform_stream(StreamKey{o.seed, 0, 0, Purpose::response}, design.n());
                }
                Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.q));
                Eigen::VectorXd y(static_cast<Eigen::Index>(f.q));
                for (std::size_t i = 0; i < design.n(); ++i) {
                    f.eval(design.row(i), aux[i], {y.data(), f.q});
                    mean += y;
                }
                if (design.n() > 0) mean /= static_cast<double>(design.n());
                j["design"] = {{"path", o.design_file},
                               {"n", design.n()},
                               {"d", design.d()},
                               {"is_latin", is_latin(design)},
                               {"mean", to_json_vector(mean)}};
            }
            write_json(o.out, j);
            manifest.outputs.push_back(o.out);
            manifest_dir = parent_or_cwd(o.out);
            out << "R trace " << format_double(rep.R.trace()) << ", full covariance trace "
                << format_double(rep.full_cov.trace()) << "\n";
        } else if (fit->parsed()) {
            manifest.command = "fit";
            std::optional<Eigen::VectorXd> truth;
            if (!o.theta0.empty()) truth = parse_vector(o.theta0);
            const Model model = make_model(o.model, truth);
            const Method method = parse_method(o.method);
            const StreamKey key{o.seed, 0, 0, Purpose::permutation};
            const auto data = replicate_data(model, method, o.n, key, o.stratify_aux);
            SolveOptions so;
            so.tol = o.tol;
            so.max_iter = o.max_iter;
            FitReport rep = solve(model.problem, data.design, data.aux, model.problem.box.center(), so);
            nlohmann::json extra;
            if (!o.no_lhs_sandwich) {
                VectorField f = score_field(model, rep.theta_hat);
                if (o.stratify_aux) f = promote_auxiliary(f);
                const auto dec = remainder_covariance(f, o.outer, o.bins, o.inner, StreamKey{o.seed, 0, 1, Purpose::oracle});
                rep.sandwich_lhs = sandwich_lhs(rep.A_hat, dec.R, rep.n, dec.psd_tolerance);
                extra["R"] = to_json(dec.R);
                extra["R_standard_errors"] = to_json(dec.standard_errors);
            }
            nlohmann::json j = to_json(rep);
            j["model"] = model.name;
            j["truth"] = to_json_vector(model.truth);
            j["seed"] = o.seed;
            j["stratify_aux"] = o.stratify_aux;
            if (!extra.is_null()) j["remainder_covariance"] = extra;
            write_json(o.out, j);
            manifest.outputs.push_back(o.out);
            manifest_dir = parent_or_cwd(o.out);
            if (!o.dataset_out.empty()) {
                GlmDataset ds;
                ds.design = data.design;
                ds.aux = data.aux;
                ds.responses = observations(model.problem, data.design, data.aux);
                ds.truth = model.truth;
                write_dataset_csv(ds, o.dataset_out);
                if (parent_or_cwd(o.dataset_out) == manifest_dir) manifest.outputs.push_back(o.dataset_out);
            }
            out << (rep.converged ? "converged" : "did not converge") << " after " << rep.iterations
                << " iterations, residual " << format_double(rep.residual_norm) << "\n";
        } else if (experiment->parsed()) {
            manifest.command = "experiment";
            ExperimentConfig cfg;
            cfg.model = o.model;
            cfg.methods = parse_methods(o.methods);
            cfg.sizes = parse_range(o.sizes);
            cfg.replications = o.reps;
            cfg.seed = o.seed;
            cfg.stratify_aux = o.stratify_aux;
            cfg.n_oracle = o.oracle_budget > 0 ? o.oracle_budget
                                               : std::max<std::size_t>(100000, cfg.sizes.empty() ? 0 : cfg.sizes.back());
            validate(cfg);
            const Model model = make_model(cfg.model);
            const ExperimentTable table = run_sweep(cfg);
            const OracleResult oracle = asymptotic_oracle(model, cfg.n_oracle, cfg.seed, o.bins, o.inner, cfg.stratify_aux);

            const fs::path dir = o.outdir;
            write_sweep_csv(table, dir / "sweep.csv");
            manifest.outputs.push_back(dir / "sweep.csv");
            nlohmann::json oj = to_json(oracle);
            oj["model"] = model.name;
            oj["truth"] = to_json_vector(model.truth);
            oj["seed"] = cfg.seed;
            write_json(dir / "oracle.json", oj);
            manifest.outputs.push_back(dir / "oracle.json");

            const Method qq_method =
                std::find(cfg.methods.begin(), cfg.methods.end(), Method::lhs) != cfg.methods.end() ? Method::lhs
                                                                                                      : cfg.methods.front();
            for (std::size_t n : cfg.sizes) {
                const auto& cell = table.cell(qq_method, n);
                if (cell.estimates.size() < 2) continue;
                const auto q = qq_from_estimates(cell.estimates, model.truth, n, Standardization::oracle,
                                                 oracle.normalized_variances);
                const fs::path p = dir / ("qq_" + std::to_string(n) + ".csv");
                write_qq_csv(q, p);
                manifest.outputs.push_back(p);
            }
            manifest_dir = dir;
            out << "wrote " << table.rows.size() << " sweep rows and " << cfg.sizes.size() << " Q-Q tables to "
                << o.outdir << "\n";
        } else if (qq->parsed()) {
            manifest.command = "qq";
            const Model model = make_model(o.model);
            const Standardization st = parse_standardization(o.standardization);
            std::optional<OracleResult> oracle;
            if (st == Standardization::oracle) {
                const std::size_t budget = o.oracle_budget > 0 ? o.oracle_budget : std::max<std::size_t>(100000, o.n);
                oracle = asymptotic_oracle(model, budget, o.seed, o.bins, o.inner, o.stratify_aux);
            }
            const auto table = qq_data(model, o.n, o.reps, o.seed, st, oracle ? &*oracle : nullptr,
                                       parse_method(o.method), o.stratify_aux);
            write_qq_csv(table, o.out);
            manifest.outputs.push_back(o.out);
            manifest_dir = parent_or_cwd(o.out);
            for (const auto& c : table.columns) {
                out << "param " << c.param + 1 << " qq_correlation " << format_double(c.correlation) << "\n";
            }
        }

        manifest.finished = std::chrono::system_clock::now();
        record_manifest(manifest_dir, manifest);
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_numerical(e.kind()) ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace lhsz::cli
