#include "cli.hpp"

#include "cawi/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#ifndef CAWI_VERSION
#define CAWI_VERSION "0.1.0"
#endif

namespace cawi::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string format_fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("not a non-negative integer: '" + s + "'");
    return std::stoull(s);
}

std::vector<double> parse_lambda_grid(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_double(item));
    return out;
}

/// Comma list, or a start:step:stop range.
std::vector<std::size_t> parse_nodes_grid(const std::string& s) {
    std::vector<std::size_t> out;
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw std::invalid_argument("nodes range must be start:step:stop");
        const auto start = parse_u64(parts[0]);
        const auto step = parse_u64(parts[1]);
        const auto stop = parse_u64(parts[2]);
        if (step == 0) throw std::invalid_argument("nodes range step must be > 0");
        for (auto v = start; v <= stop; v += step) out.push_back(v);
        return out;
    }
    for (const auto& item : split_list(s)) out.push_back(parse_u64(item));
    return out;
}

std::vector<CopulaFamily> parse_families(const std::vector<std::string>& names) {
    std::vector<CopulaFamily> out;
    for (const auto& n : names) out.push_back(parse_family(n));
    return out;
}

std::vector<ActivationKind> parse_activations(const std::vector<std::string>& names) {
    std::vector<ActivationKind> out;
    for (const auto& n : names) out.push_back(parse_activation(n));
    return out;
}

LabelColumn label_column_of(const std::string& s) {
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos)
        return static_cast<std::size_t>(std::stoull(s));
    return s;
}

std::size_t threads_from_env() {
    if (const char* env = std::getenv("CAWI_THREADS")) {
        try {
            const auto n = parse_u64(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

Json manifest(const std::string& command, const RunConfig& cfg) {
    return {
        {"command", command},
        {"version", version_string()},
        {"config", config_to_json(cfg)},
        {"seeds", cfg.seeds},
        {"threads", cfg.threads},
    };
}

// Flags shared by fit and bench.
struct CommonFlags {
    std::string config_path;
    std::vector<std::string> data;
    std::string label_col;
    std::string arch;
    std::string families;
    std::string marginal;
    std::size_t k = 0;
    std::string seeds;
    std::size_t m_cap = 0;
    std::string lambda_grid;
    std::string nodes_grid;
    std::string activations;
    std::string out;
    std::size_t threads = 0;
    std::size_t drvfl_layers = 0;
    std::string bls;
    bool all_layers = false;
    std::string std_denominator;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path, "JSON config file (flags override it)");
        app.add_option("--data", data, "Dataset CSV path(s)")->delimiter(',');
        app.add_option("--label-col", label_col, "Label column name or zero-based index (default: last)");
        app.add_option("--arch", arch, "rvfl | elm | drvfl | bls");
        app.add_option("--families", families, "Comma list of iid,gaussian,t,clayton,frank,gumbel");
        app.add_option("--marginal", marginal, "Weight marginal: uniform | normal");
        app.add_option("--k", k, "Cross-validation folds");
        app.add_option("--seeds", seeds, "Comma list of seeds");
        app.add_option("--m-cap", m_cap, "Row cap for Kendall tau subsampling");
        app.add_option("--lambda-grid", lambda_grid, "Comma list of ridge parameters");
        app.add_option("--nodes-grid", nodes_grid, "Comma list or start:step:stop");
        app.add_option("--activations", activations, "Comma list of activation names or codes 1-7");
        app.add_option("--out", out, "Output directory");
        app.add_option("--threads", threads, "Worker threads (fallback: CAWI_THREADS)");
        app.add_option("--drvfl-layers", drvfl_layers, "Number of dRVFL hidden layers");
        app.add_option("--bls", bls, "BLS shape q,p,s (r comes from the nodes grid)");
        app.add_flag("--all-layers", all_layers, "Fit a copula for deeper layers too");
        app.add_option("--std-denominator", std_denominator, "population | sample");
    }

    RunConfig resolve(const CLI::App& app) const {
        RunConfig cfg;
        bool threads_in_config = false;
        if (!config_path.empty()) {
            const auto j = read_json_file(config_path);
            threads_in_config = j.is_object() && j.contains("threads");
            apply_config_json(cfg, j);
        }
        auto given = [&](const char* name) { return app.count(name) > 0; };
        if (given("--data")) cfg.data = data;
        if (given("--label-col")) cfg.label_col = label_col;
        if (given("--arch")) cfg.arch = parse_arch(arch);
        if (given("--families")) cfg.families = parse_families(split_list(families));
        if (given("--marginal")) cfg.marginal = parse_marginal(marginal);
        if (given("--k")) cfg.k = k;
        if (given("--seeds")) {
            cfg.seeds.clear();
            for (const auto& s : split_list(seeds)) cfg.seeds.push_back(parse_u64(s));
        }
        if (given("--m-cap")) cfg.m_cap = m_cap;
        if (given("--lambda-grid")) cfg.lambda_grid = parse_lambda_grid(lambda_grid);
        if (given("--nodes-grid")) cfg.nodes_grid = parse_nodes_grid(nodes_grid);
        if (given("--activations")) cfg.activations = parse_activations(split_list(activations));
        if (given("--out")) cfg.out = out;
        if (given("--threads")) cfg.threads = threads;
        else if (!threads_in_config) cfg.threads = threads_from_env();
        if (given("--drvfl-layers")) cfg.drvfl_layers = drvfl_layers;
        if (given("--bls")) {
            const auto parts = split_list(bls);
            if (parts.size() != 3) throw std::invalid_argument("--bls expects q,p,s");
            cfg.bls.q = parse_u64(parts[0]);
            cfg.bls.p = parse_u64(parts[1]);
            cfg.bls.s = parse_u64(parts[2]);
        }
        if (all_layers) cfg.all_layers = true;
        if (given("--std-denominator")) {
            if (std_denominator == "population") cfg.std_denominator = StdDenominator::population;
            else if (std_denominator == "sample") cfg.std_denominator = StdDenominator::sample;
            else throw std::invalid_argument("--std-denominator must be population or sample");
        }
        cli::validate(cfg);
        return cfg;
    }
};

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    const auto data = load_csv(cfg.data.front(), label_column_of(cfg.label_col));
    IndexList all(data.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto scaler = fit_standardizer(data.features, all, cfg.std_denominator);
    const Matrix X = apply_standardizer(scaler, data.features);
    const auto U = pseudo_observations(X);
    auto rng = RngStream::derive(cfg.seeds.front(), StreamPurpose::tau_subsample, 0);
    const auto tau = tau_matrix(U, cfg.m_cap, rng);

    out << "dataset=" << data.name << " m=" << data.rows() << " d=" << data.cols()
        << " bar_tau=" << format_fixed4(tau.bar_tau) << " subsampled=" << tau.subsampled << '\n';
    for (auto family : cfg.families) {
        const auto model = fit_copula(family, U, tau);
        const auto path = cfg.out / (data.name + "." + std::string(family_name(family)) + ".copula.json");
        write_json_file(path, copula_to_json(model));
        out << "family=" << family_name(family);
        if (is_archimedean(family)) out << " theta=" << format_fixed4(model.theta);
        if (family == CopulaFamily::student_t) out << " nu=" << model.nu;
        if (is_elliptical(family)) {
            double max_off = 0.0;
            for (Eigen::Index i = 0; i < model.R.rows(); ++i)
                for (Eigen::Index j = 0; j < model.R.cols(); ++j)
                    if (i != j) max_off = std::max(max_off, std::fabs(model.R(i, j)));
            out << " max_abs_offdiag_R=" << format_fixed4(max_off);
        }
        out << " clamped=" << model.diagnostics.clamped
            << " subsampled=" << model.diagnostics.subsampled << " -> " << path.string() << '\n';
    }
    write_json_file(cfg.out / "manifest.json", manifest("fit", cfg));
    return kExitOk;
}

int cmd_bench(const RunConfig& cfg, bool timing, std::ostream& out, std::ostream& err) {
    const auto grid = grid_of(cfg);
    std::vector<std::vector<EvalReport>> by_seed(cfg.seeds.size());
    std::string all_csv = report_csv_header();
    Json failures = Json::array();
    std::size_t succeeded = 0;
    std::vector<std::pair<std::string, std::vector<SeedSummaryRow>>> summaries;

    for (const auto& path : cfg.data) {
        Dataset data;
        try {
            data = load_csv(path, label_column_of(cfg.label_col));
        } catch (const std::exception& e) {
            err << "bench: skipping '" << path << "': " << e.what() << '\n';
            failures.push_back({{"dataset", path}, {"error", e.what()}});
            continue;
        }
        try {
            MultiSeedResult multi;
            for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
                const auto seed = cfg.seeds[si];
                const auto opts = options_of(cfg, seed);
                auto report = run_cv(data, grid, opts);
                const auto stem = data.name + "_seed" + std::to_string(seed);
                write_json_file(cfg.out / (stem + ".json"), report_to_json(report));
                write_text_file(cfg.out / (stem + ".csv"),
                                report_csv_header() + report_csv_rows(report));
                all_csv += report_csv_rows(report);
                if (timing) {
                    Json t = Json::array();
                    for (const auto& f : report.families)
                        t.push_back({{"family", family_name(f.family)},
                                     {"mean_seconds_per_fit", f.mean_train_time}});
                    write_json_file(cfg.out / (stem + ".timing.json"), t);
                }
                multi.reports.push_back(report);
                by_seed[si].push_back(std::move(report));
            }
            if (cfg.seeds.size() > 1) {
                multi.summary = seed_summary(multi.reports);
                write_json_file(cfg.out / (data.name + "_summary.json"), multi_seed_to_json(multi));
                summaries.emplace_back(data.name, multi.summary);
            }
            ++succeeded;
        } catch (const std::exception& e) {
            err << "bench: dataset '" << data.name << "' failed: " << e.what() << '\n';
            failures.push_back({{"dataset", data.name}, {"error", e.what()}});
        }
    }

    write_text_file(cfg.out / "bench.csv", all_csv);
    auto man = manifest("bench", cfg);
    man["failures"] = failures;
    write_json_file(cfg.out / "manifest.json", man);

    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        if (by_seed[si].empty()) continue;
        out << "seed " << cfg.seeds[si] << " (" << arch_name(cfg.arch) << ", test accuracy %)\n"
            << format_table(by_seed[si]) << '\n';
    }
    if (!summaries.empty()) {
        out << "mean +/- sd over seeds\n";
        for (const auto& [name, rows] : summaries) {
            out << name;
            for (const auto& row : rows)
                out << "  " << family_name(row.family) << '=' << format_percent(row.mean) << "+/-"
                    << format_percent(row.sd);
            out << '\n';
        }
    }
    return succeeded > 0 ? kExitOk : kExitFailure;
}

int cmd_sample(const std::string& copula_path, std::size_t d, std::size_t h,
               const std::string& marginal, std::uint64_t seed, const std::filesystem::path& out_path,
               std::ostream& out, std::ostream& err) {
    const auto model = copula_from_json(read_json_file(copula_path));
    if (model.d != d) {
        err << "sample: copula in '" << copula_path << "' has d = " << model.d
            << " but --d is " << d << '\n';
        return kExitUsage;
    }
    auto rng = RngStream::derive(seed, StreamPurpose::weights, 0, 0);
    auto init = sample_weight_init(model, d, h, parse_marginal(marginal), rng);
    init.provenance.seed = seed;
    write_json_file(out_path, weight_init_to_json(init));

    RunConfig cfg;
    cfg.seeds = {seed};
    cfg.marginal = init.provenance.marginal;
    cfg.families = {model.family};
    cfg.out = out_path;
    auto man = manifest("sample", cfg);
    man["copula"] = copula_path;
    man["d"] = d;
    man["h"] = h;
    write_json_file(out_path.string() + ".manifest.json", man);
    out << "wrote " << d << "x" << h << " weights (" << family_name(model.family) << ", "
        << marginal_name(init.provenance.marginal) << ") to " << out_path.string() << '\n';
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& paths, bool two_sided, std::ostream& out) {
    std::vector<EvalReport> reports;
    for (const auto& p : paths) {
        const auto j = read_json_file(p);
        if (j.contains("reports")) {
            for (const auto& r : j["reports"]) reports.push_back(report_from_json(r));
        } else {
            reports.push_back(report_from_json(j));
        }
    }
    out << format_table(reports);
    std::vector<double> diffs;
    for (const auto& r : reports) {
        const auto* iid = r.find(CopulaFamily::independence);
        const auto* best = r.find(r.best_family);
        if (iid && best && r.best_family != CopulaFamily::independence)
            diffs.push_back(best->mean_accuracy - iid->mean_accuracy);
    }
    const auto wins = std::count_if(diffs.begin(), diffs.end(), [](double x) { return x > 0.0; });
    out << "CAWI > iid on " << wins << "/" << reports.size() << " reports";
    if (!diffs.empty()) {
        double mean = 0.0;
        for (double x : diffs) mean += x;
        out << ", mean improvement " << format_signed_percent(mean / static_cast<double>(diffs.size()));
    }
    out << '\n';
    const bool any_nonzero = std::any_of(diffs.begin(), diffs.end(), [](double x) { return x != 0.0; });
    if (any_nonzero) {
        const auto w = wilcoxon_signed_rank(diffs, two_sided ? Alternative::two_sided : Alternative::greater);
        out << "Wilcoxon signed-rank: W+ = " << w.w_plus << ", n = " << w.n_effective
            << ", p = " << w.p_value << (w.exact ? " (exact" : " (normal approximation")
            << (two_sided ? ", two-sided)" : ", one-sided)") << '\n';
    } else {
        out << "Wilcoxon signed-rank: no nonzero differences\n";
    }
    return kExitOk;
}

}  // namespace

std::string version_string() { return CAWI_VERSION; }

void apply_config_json(RunConfig& cfg, const Json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "data") {
            cfg.data = value.is_string() ? std::vector<std::string>{value.get<std::string>()}
                                         : value.get<std::vector<std::string>>();
        } else if (key == "label_col") {
            cfg.label_col = value.is_number() ? std::to_string(value.get<std::size_t>())
                                              : value.get<std::string>();
        } else if (key == "arch") {
            cfg.arch = parse_arch(value.get<std::string>());
        } else if (key == "drvfl_layers") {
            cfg.drvfl_layers = value.get<std::size_t>();
        } else if (key == "bls") {
            for (const auto& [bk, bv] : value.items()) {
                if (bk == "q") cfg.bls.q = bv.get<std::size_t>();
                else if (bk == "p") cfg.bls.p = bv.get<std::size_t>();
                else if (bk == "s") cfg.bls.s = bv.get<std::size_t>();
                else throw std::invalid_argument("config: unknown bls key '" + bk + "'");
            }
        } else if (key == "families") {
            cfg.families = parse_families(value.get<std::vector<std::string>>());
        } else if (key == "marginal") {
            cfg.marginal = parse_marginal(value.get<std::string>());
        } else if (key == "k") {
            cfg.k = value.get<std::size_t>();
        } else if (key == "seeds") {
            cfg.seeds = value.get<std::vector<std::uint64_t>>();
        } else if (key == "m_cap") {
            cfg.m_cap = value.get<std::size_t>();
        } else if (key == "lambda_grid") {
            cfg.lambda_grid = value.get<std::vector<double>>();
        } else if (key == "nodes_grid") {
            cfg.nodes_grid = value.get<std::vector<std::size_t>>();
        } else if (key == "activations") {
            cfg.activations = parse_activations(value.get<std::vector<std::string>>());
        } else if (key == "out") {
            cfg.out = value.get<std::string>();
        } else if (key == "threads") {
            cfg.threads = value.get<std::size_t>();
        } else if (key == "all_layers") {
            cfg.all_layers = value.get<bool>();
        } else if (key == "std_denominator") {
            const auto s = value.get<std::string>();
            if (s == "population") cfg.std_denominator = StdDenominator::population;
            else if (s == "sample") cfg.std_denominator = StdDenominator::sample;
            else throw std::invalid_argument("config: std_denominator must be population or sample");
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
}

Json config_to_json(const RunConfig& cfg) {
    Json fams = Json::array();
    for (auto f : cfg.families) fams.push_back(family_name(f));
    Json acts = Json::array();
    for (auto a : cfg.activations) acts.push_back(activation_name(a));
    return {
        {"data", cfg.data},
        {"label_col", cfg.label_col},
        {"arch", arch_name(cfg.arch)},
        {"drvfl_layers", cfg.drvfl_layers},
        {"bls", {{"q", cfg.bls.q}, {"p", cfg.bls.p}, {"s", cfg.bls.s}}},
        {"families", fams},
        {"marginal", marginal_name(cfg.marginal)},
        {"k", cfg.k},
        {"seeds", cfg.seeds},
        {"m_cap", cfg.m_cap},
        {"lambda_grid", cfg.lambda_grid},
        {"nodes_grid", cfg.nodes_grid},
        {"activations", acts},
        {"out", cfg.out.string()},
        {"threads", cfg.threads},
        {"all_layers", cfg.all_layers},
        {"std_denominator",
         cfg.std_denominator == StdDenominator::population ? "population" : "sample"},
    };
}

void validate(RunConfig& cfg) {
    if (cfg.data.empty()) throw std::invalid_argument("no dataset given (--data)");
    if (cfg.k < 2) throw std::invalid_argument("k must be >= 2");
    if (cfg.seeds.empty()) throw std::invalid_argument("at least one seed is required");
    if (cfg.m_cap < 50) throw std::invalid_argument("m_cap must be >= 50");
    if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (cfg.drvfl_layers < 1) throw std::invalid_argument("drvfl_layers must be >= 1");
    auto grid = grid_of(cfg);
    normalize(grid);
    cfg.families = grid.families;
    ArchSpec probe = options_of(cfg, cfg.seeds.front()).arch;
    probe.h = grid.node_counts.front();
    probe.layer_widths.assign(cfg.drvfl_layers, grid.node_counts.front());
    probe.bls.r = grid.node_counts.front();
    cawi::validate(probe);
}

GridSpec grid_of(const RunConfig& cfg) {
    GridSpec g;
    g.lambdas = cfg.lambda_grid;
    g.node_counts = cfg.nodes_grid;
    g.activations = cfg.activations;
    g.families = cfg.families;
    return g;
}

EvalOptions options_of(const RunConfig& cfg, std::uint64_t seed) {
    EvalOptions o;
    o.arch.kind = cfg.arch;
    o.arch.bls.q = cfg.bls.q;
    o.arch.bls.p = cfg.bls.p;
    o.arch.bls.s = cfg.bls.s;
    o.drvfl_layers = cfg.drvfl_layers;
    o.arch.layer_widths.assign(cfg.drvfl_layers, o.arch.h);
    o.k = cfg.k;
    o.seed = seed;
    o.marginal = cfg.marginal;
    o.m_cap = cfg.m_cap;
    o.std_denominator = cfg.std_denominator;
    o.cawi_all_layers = cfg.all_layers;
    o.threads = cfg.threads;
    return o;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Copula-aligned weight initialization for randomized neural networks", "cawi"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    auto* fit = app.add_subcommand("fit", "Fit copulas to a dataset and write them as JSON");
    CommonFlags fit_flags;
    fit_flags.attach(*fit);

    auto* bench = app.add_subcommand("bench", "Cross-validated comparison of iid and copula initializers");
    CommonFlags bench_flags;
    bench_flags.attach(*bench);
    bool timing = false;
    bench->add_flag("--timing", timing, "Also write wall-clock timings (not reproducible)");

    auto* sample = app.add_subcommand("sample", "Sample frozen weights from a fitted copula");
    sample->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
    std::string copula_path;
    std::size_t d = 0;
    std::size_t h = 0;
    std::string marginal = "uniform";
    std::uint64_t seed = 42;
    std::string sample_out = "weights.json";
    sample->add_option("--copula", copula_path, "Copula JSON from `cawi fit`")->required();
    sample->add_option("--d", d, "Input dimension")->required();
    sample->add_option("--h", h, "Hidden width")->required()->check(CLI::PositiveNumber);
    sample->add_option("--marginal", marginal, "uniform | normal");
    sample->add_option("--seed", seed, "Seed");
    sample->add_option("--out", sample_out, "Output file");

    auto* report = app.add_subcommand("report", "Print the accuracy table and Wilcoxon test for reports");
    std::vector<std::string> report_paths;
    bool two_sided = false;
    report->add_option("reports", report_paths, "Report JSON files")->required();
    report->add_flag("--two-sided", two_sided, "Two-sided alternative");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_flags.resolve(*fit), out);
        if (bench->parsed()) return cmd_bench(bench_flags.resolve(*bench), timing, out, err);
        if (sample->parsed())
            return cmd_sample(copula_path, d, h, marginal, seed, sample_out, out, err);
        if (report->parsed()) return cmd_report(report_paths, two_sided, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace cawi::cli
