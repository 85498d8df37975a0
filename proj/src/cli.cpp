#include "prophetlab/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <unistd.h>
#include <variant>
#include <vector>

#include "prophetlab/duals.hpp"
#include "prophetlab/errors.hpp"
#include "prophetlab/format.hpp"
#include "prophetlab/iid.hpp"
#include "prophetlab/model.hpp"
#include "prophetlab/noniid.hpp"

namespace prophetlab::cli {

namespace {

using duals::Benchmark;
using duals::PolicyClass;

enum class Format { Csv, Json };

// Residual below which a fixed point counts as certified.
constexpr double kFixedPointResidual = 1e-10;

const std::map<std::string, PolicyClass> kPolicies{
    {"dp", PolicyClass::DP}, {"st", PolicyClass::ST}, {"ost", PolicyClass::OST}};
const std::map<std::string, Benchmark> kBenchmarks{{"proph", Benchmark::Proph}, {"exante", Benchmark::ExAnte}};
const std::map<std::string, Format> kFormats{{"csv", Format::Csv}, {"json", Format::Json}};
const std::map<std::string, iid::Method> kMethods{{"auto", iid::Method::Auto}, {"lp", iid::Method::Lp}};

std::string certified(bool ok) { return ok ? "certified" : "uncertified"; }

// A cell is empty when the value does not apply to the row.
using Cell = std::variant<std::monostate, long long, double, std::string, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    [[nodiscard]] std::string csv() const {
        std::ostringstream out;
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out << ',';
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>) {
                            out << format_sig(v);
                        } else if constexpr (std::is_same_v<T, bool>) {
                            out << (v ? "true" : "false");
                        } else if constexpr (!std::is_same_v<T, std::monostate>) {
                            out << v;
                        }
                    },
                    row[c]);
            }
            out << '\n';
        }
        return out.str();
    }

    [[nodiscard]] std::string json() const {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& row : rows) {
            nlohmann::ordered_json obj = nlohmann::ordered_json::object();
            for (std::size_t c = 0; c < row.size(); ++c) {
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, std::monostate>) {
                            obj[columns[c]] = nullptr;
                        } else {
                            obj[columns[c]] = v;
                        }
                    },
                    row[c]);
            }
            arr.push_back(std::move(obj));
        }
        return arr.dump(2) + "\n";
    }

    [[nodiscard]] std::string render(Format f) const { return f == Format::Csv ? csv() : json(); }
};

std::string join_row(std::span<const double> values, char sep) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += sep;
        s += format_sig(values[i]);
    }
    return s;
}

// G as "row;row;..." with space-separated entries.
std::string g_string(const model::TypeDistributions& g) {
    std::string s;
    for (int i = 0; i < g.n(); ++i) {
        if (i) s += ';';
        s += join_row(g.matrix().row(i), ' ');
    }
    return s;
}

double benchmark_value(const model::Instance& inst, Benchmark b) {
    return b == Benchmark::Proph ? model::proph_value(inst) : model::exante_value(inst);
}

struct Marginals {
    std::optional<int> k;
    std::vector<double> g;
};

Marginals load_marginals(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open input file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("g") || !doc["g"].is_array()) {
        throw ValidationError("marginals file needs an array field \"g\"");
    }
    Marginals m;
    for (const auto& v : doc["g"]) {
        if (!v.is_number()) {
            throw ValidationError("field \"g\" must hold numbers");
        }
        m.g.push_back(v.get<double>());
    }
    if (doc.contains("k")) {
        if (!doc["k"].is_number_integer()) {
            throw ValidationError("field \"k\" must be an integer");
        }
        m.k = doc["k"].get<int>();
    }
    return m;
}

void configure_logging() {
    static const std::shared_ptr<spdlog::logger> logger = [] {
        auto l = std::make_shared<spdlog::logger>("prophetlab", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        l->set_pattern("[%l] %v");
        spdlog::set_default_logger(l);
        return l;
    }();
    const char* env = std::getenv("PROPHETLAB_LOG");
    const std::string level = env && *env ? env : "error";
    if (level == "error") {
        logger->set_level(spdlog::level::err);
    } else if (level == "info") {
        logger->set_level(spdlog::level::info);
    } else if (level == "debug") {
        logger->set_level(spdlog::level::debug);
    } else {
        throw ValidationError("PROPHETLAB_LOG must be one of error, info, debug; got \"" + level + "\"");
    }
}

// One output file per command; table1 may add a plot.
struct Output {
    std::string text;
    std::string svg;
};

struct Command {
    CLI::App* app = nullptr;
    std::function<Output()> body;
};

template <class T>
CLI::Option* choice(CLI::App* app, const std::string& name, T& target, const std::map<std::string, T>& names,
                    const std::string& help) {
    return app->add_option(name, target, help)->transform(CLI::CheckedTransformer(names, CLI::ignore_case));
}

// Parsed flags of one invocation. Optional fields take command-specific defaults.
struct RunConfig {
    std::string out_path;
    std::string svg_path;
    std::string instance_path;
    std::string g_path;
    Format format = Format::Csv;
    int jobs = 1;
    int k = 1;
    int n = 2;
    int kmax = 1;
    std::vector<int> ns;
    std::vector<int> ks{10, 100, 1000, 10000};
    double eps = 1e-3;
    std::optional<double> tol;
    PolicyClass policy = PolicyClass::DP;
    Benchmark benchmark = Benchmark::Proph;
    iid::Method method = iid::Method::Auto;
    long trials = 0;
    std::uint64_t seed = 1;
    int uniform = 0;
    int worst = 0;
    std::optional<double> step;
    std::optional<long> budget;
    noniid::SearchOptions search;
};

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ValidationError("cannot write output file: " + path.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw ValidationError("failed writing output file: " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ValidationError("cannot replace output file: " + path.string());
    }
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tight guarantees for k-unit prophet inequalities", "prophetlab"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    app.set_version_flag("--version", "prophetlab 1.0");

    RunConfig c;
    std::vector<Command> commands;
    const auto add_output = [&](CLI::App* sub, bool with_format) {
        sub->add_option("--out", c.out_path, "Output file (default: standard output)");
        if (with_format) choice(sub, "--format", c.format, kFormats, "csv or json");
    };
    const auto add_classes = [&](CLI::App* sub) {
        choice(sub, "--policy", c.policy, kPolicies, "dp, st or ost (default dp)");
        choice(sub, "--benchmark", c.benchmark, kBenchmarks, "proph or exante (default proph)");
    };
    const auto add_jobs = [&](CLI::App* sub) {
        sub->add_option("--jobs", c.jobs, "Worker threads (default 1)")->check(CLI::PositiveNumber);
    };

    auto* iid_cmd = app.add_subcommand("iid-guarantee", "Tight IID guarantee from the discretized coverage LP");
    iid_cmd->add_option("--k", c.k, "Slots")->required()->check(CLI::PositiveNumber);
    iid_cmd->add_option("--n", c.n, "Agents")->required()->check(CLI::PositiveNumber);
    iid_cmd->add_option("--eps", c.eps, "Grid accuracy (default 1e-3)");
    iid_cmd->add_option("--tol", c.tol, "LP tolerance (default 1e-9)");
    add_classes(iid_cmd);
    choice(iid_cmd, "--method", c.method, kMethods, "auto or lp (default auto)");
    add_output(iid_cmd, true);
    commands.push_back({iid_cmd, [&] {
        iid::IidOptions options;
        options.method = c.method;
        options.tol = c.tol.value_or(options.tol);
        const iid::IidGuarantee r = iid::iid_guarantee(c.n, c.k, c.eps, c.policy, c.benchmark, options);
        const Table t{{"k", "n", "epsilon", "policy", "benchmark", "method", "theta", "theta_low", "theta_high",
                       "grid_size", "rounds", "certified"},
                      {{c.k, c.n, c.eps, std::string(duals::to_string(c.policy)), std::string(duals::to_string(c.benchmark)), r.method, r.theta,
                        r.theta_low, r.theta_high, static_cast<long long>(r.grid_size), r.rounds,
                        certified(r.certified)}}};
        return Output{t.render(c.format), {}};
    }});

    auto* table1_cmd = app.add_subcommand("table1", "IID DP guarantees against the prophet for k = 1..kmax");
    table1_cmd->add_option("--kmax", c.kmax, "Largest k")->required()->check(CLI::PositiveNumber);
    table1_cmd->add_option("--n", c.ns, "Agent counts, comma separated")->required()->delimiter(',');
    table1_cmd->add_option("--eps", c.eps, "Grid accuracy (default 1e-3)");
    table1_cmd->add_option("--svg", c.svg_path, "Plot file (default: the output path with .svg)");
    add_jobs(table1_cmd);
    add_output(table1_cmd, true);
    commands.push_back({table1_cmd, [&] {
        const std::vector<iid::Table1Row> rows = iid::table1(c.kmax, c.ns, c.eps, c.jobs);
        for (const iid::Table1Row& r : rows) {
            spdlog::info("table1 k={} n={}: theta_high {:.9g} in {:.0f} ms", r.k, r.n, r.theta_high, r.runtime_ms);
        }
        Output o;
        if (c.format == Format::Csv) {
            o.text = iid::table1_csv(rows);
        } else {
            Table t{{"k", "n", "epsilon", "theta_low", "theta_high", "reference_value", "certified"}, {}};
            for (const iid::Table1Row& r : rows) {
                t.rows.push_back({r.k, r.n, r.epsilon, r.theta_low, r.theta_high,
                                  r.reference ? Cell{*r.reference} : Cell{}, certified(r.certified)});
            }
            o.text = t.json();
        }
        o.svg = iid::table1_svg(rows);
        return o;
    }});

    auto* kertz_cmd = app.add_subcommand("kertz", "Single-slot IID recursion");
    kertz_cmd->add_option("--n", c.n, "Agents")->required()->check(CLI::PositiveNumber);
    kertz_cmd->add_option("--tol", c.tol, "Bisection tolerance (default 1e-12)");
    add_output(kertz_cmd, true);
    commands.push_back({kertz_cmd, [&] {
        const iid::KertzPath p = iid::kertz_recursion(c.n, c.tol.value_or(1e-12));
        const Table t{{"n", "theta", "certified"}, {{c.n, p.theta, certified(true)}}};
        return Output{t.render(c.format), {}};
    }});

    auto* hill_cmd = app.add_subcommand("hill-kertz", "Limit constant of the single-slot IID guarantee");
    hill_cmd->add_option("--tol", c.tol, "Root tolerance (default 1e-10)");
    add_output(hill_cmd, true);
    commands.push_back({hill_cmd, [&] {
        const Table t{{"theta", "certified"}, {{iid::hill_kertz_constant(c.tol.value_or(1e-10)), certified(true)}}};
        return Output{t.render(c.format), {}};
    }});

    auto* bernopt_cmd = app.add_subcommand("bernopt", "Bernoulli crossing value for n agents and k slots");
    bernopt_cmd->add_option("--k", c.k, "Slots")->required()->check(CLI::PositiveNumber);
    bernopt_cmd->add_option("--n", c.n, "Agents")->required()->check(CLI::PositiveNumber);
    bernopt_cmd->add_option("--tol", c.tol, "Bisection tolerance (default 1e-13)");
    add_output(bernopt_cmd, true);
    commands.push_back({bernopt_cmd, [&] {
        const noniid::FixedPointResult r = noniid::bernopt_equal(c.n, c.k, c.tol.value_or(1e-13));
        const Table t{{"k", "n", "rho", "alpha", "residual", "certified"},
                      {{c.k, c.n, r.parameter, r.alpha, r.residual, certified(r.residual <= kFixedPointResidual)}}};
        return Output{t.render(c.format), {}};
    }});

    auto* pois_cmd = app.add_subcommand("pois-lambda", "Poisson fixed point for k slots");
    pois_cmd->add_option("--k", c.k, "Slots")->required()->check(CLI::PositiveNumber);
    pois_cmd->add_option("--tol", c.tol, "Bisection tolerance (default 1e-13)");
    add_output(pois_cmd, true);
    commands.push_back({pois_cmd, [&] {
        const noniid::FixedPointResult r = noniid::poisson_fixed_point(c.k, c.tol.value_or(1e-13));
        const Table t{{"k", "lambda", "alpha", "residual", "certified"},
                      {{c.k, r.parameter, r.alpha, r.residual, certified(r.residual <= kFixedPointResidual)}}};
        return Output{t.render(c.format), {}};
    }});

    auto* rate_cmd = app.add_subcommand("rate-table", "Poisson fixed points and the scaled gap over a list of k");
    rate_cmd->add_option("--k", c.ks, "Slot counts, comma separated (default 10,100,1000,10000)")->delimiter(',');
    add_jobs(rate_cmd);
    add_output(rate_cmd, true);
    commands.push_back({rate_cmd, [&] {
        const std::vector<noniid::RateRow> rows = noniid::rate_table(c.ks, c.jobs);
        if (c.format == Format::Csv) return Output{noniid::rate_table_csv(rows), {}};
        Table t{{"k", "lambda_k", "alpha_k", "scaled_gap"}, {}};
        for (const noniid::RateRow& r : rows) t.rows.push_back({r.k, r.lambda, r.alpha, r.scaled_gap});
        return Output{t.json(), {}};
    }});

    auto* eval_cmd = app.add_subcommand("eval", "Exact value of a policy on an instance file");
    eval_cmd->add_option("--instance", c.instance_path, "Instance JSON")->required();
    add_classes(eval_cmd);
    eval_cmd->add_option("--trials", c.trials, "Monte Carlo trials (default 0, none)")->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--seed", c.seed, "Monte Carlo seed (default 1)");
    add_output(eval_cmd, true);
    commands.push_back({eval_cmd, [&] {
        const model::Instance inst = model::load_instance(c.instance_path);
        double value = 0.0;
        model::Policy rule;
        switch (c.policy) {
            case PolicyClass::DP:
                value = model::dp_value(inst);
                rule = model::dp_policy(inst);
                break;
            case PolicyClass::ST: {
                const model::ThresholdChoice best = model::best_st(inst);
                value = best.value;
                rule = best.rule;
                break;
            }
            case PolicyClass::OST: {
                const model::StaticThreshold r =
                    duals::ost_best(model::TypeDistributions::from_instance(inst), inst.k(), c.benchmark).rule;
                value = model::st_value(inst, r);
                rule = r;
                break;
            }
        }
        Cell type, rho;
        if (const auto* st = std::get_if<model::StaticThreshold>(&rule)) {
            type = st->type;
            rho = st->rho;
        }
        Cell mc_mean, mc_err;
        if (c.trials > 0) {
            const model::MonteCarloEstimate mc = model::simulate_policy(inst, rule, c.trials, c.seed);
            mc_mean = mc.mean;
            mc_err = mc.std_error;
        }
        const double bench = benchmark_value(inst, c.benchmark);
        const Table t{{"policy", "benchmark", "policy_value", "benchmark_value", "ratio", "threshold_type",
                       "threshold_rho", "mc_mean", "mc_std_error", "certified"},
                      {{std::string(duals::to_string(c.policy)), std::string(duals::to_string(c.benchmark)), value, bench,
                        bench > 0.0 ? Cell{value / bench} : Cell{}, type, rho, mc_mean, mc_err, certified(true)}}};
        return Output{t.render(c.format), {}};
    }});

    auto* dual_cmd = app.add_subcommand("dual", "Guarantee report with its dual certificate, as JSON");
    auto* dual_instance = dual_cmd->add_option("--instance", c.instance_path, "Instance JSON");
    auto* dual_g = dual_cmd->add_option("--g", c.g_path, "G-only JSON");
    dual_instance->excludes(dual_g);
    add_classes(dual_cmd);
    add_output(dual_cmd, false);
    commands.push_back({dual_cmd, [&, dual_instance, dual_g] {
        if (dual_instance->count() + dual_g->count() != 1) {
            throw ValidationError("dual needs exactly one of --instance, --g");
        }
        int k = 1;
        std::optional<model::TypeDistributions> g;
        if (!c.instance_path.empty()) {
            const model::Instance inst = model::load_instance(c.instance_path);
            k = inst.k();
            g = model::TypeDistributions::from_instance(inst);
        } else {
            model::GFile file = model::load_g_file(c.g_path);
            k = file.k;
            g = std::move(file.g);
        }
        return Output{duals::to_json(duals::guarantee_report(*g, k, c.policy, c.benchmark)) + "\n", {}};
    }});

    auto* ocrs_cmd = app.add_subcommand("ocrs", "Balanced contention resolution value");
    auto* ocrs_g = ocrs_cmd->add_option("--g", c.g_path, "Marginals JSON {\"k\", \"g\": [...]}");
    auto* ocrs_uniform =
        ocrs_cmd->add_option("--uniform", c.uniform, "n agents with marginals k/n")->check(CLI::PositiveNumber);
    auto* ocrs_worst =
        ocrs_cmd->add_option("--worst", c.worst, "Search the worst marginals for n agents")->check(CLI::PositiveNumber);
    ocrs_g->excludes(ocrs_uniform)->excludes(ocrs_worst);
    ocrs_uniform->excludes(ocrs_worst);
    auto* ocrs_k = ocrs_cmd->add_option("--k", c.k, "Slots (default 1, or the file's k)")->check(CLI::PositiveNumber);
    ocrs_cmd->add_option("--step", c.step, "Grid step for --worst (default 0.01)");
    ocrs_cmd->add_option("--budget", c.budget, "Evaluation budget for --worst (default 2000000)");
    add_output(ocrs_cmd, true);
    commands.push_back({ocrs_cmd, [&, ocrs_g, ocrs_uniform, ocrs_worst, ocrs_k] {
        if (ocrs_g->count() + ocrs_uniform->count() + ocrs_worst->count() != 1) {
            throw ValidationError("ocrs needs exactly one of --g, --uniform, --worst");
        }
        Table t{{"n", "k", "marginals", "theta", "evaluations", "exhausted", "certified"}, {}};
        if (c.worst > 0) {
            const double step = c.step.value_or(0.01);
            const long budget = c.budget.value_or(2'000'000);
            const duals::OcrsSearchResult r = duals::ocrs_worst_g(c.worst, c.k, step, budget);
            // Only full enumeration of the grid certifies the minimum.
            const bool enumerated = std::pow(std::round(1.0 / step) + 1.0, c.worst) <= static_cast<double>(budget);
            t.rows.push_back({c.worst, c.k, join_row(r.marginals, ' '), r.theta,
                              static_cast<long long>(r.evaluations), r.exhausted, certified(enumerated)});
            return Output{t.render(c.format), {}};
        }
        std::vector<double> g;
        int k = c.k;
        if (c.uniform > 0) {
            g.assign(static_cast<std::size_t>(c.uniform), std::min(1.0, static_cast<double>(k) / c.uniform));
        } else {
            Marginals m = load_marginals(c.g_path);
            if (m.k && ocrs_k->count() == 0) k = *m.k;
            g = std::move(m.g);
        }
        const duals::DualResult r = duals::ocrs_value(g, k);
        t.rows.push_back({static_cast<long long>(g.size()), k, join_row(g, ' '), r.theta, 1LL, false, certified(true)});
        return Output{t.render(c.format), {}};
    }});

    auto* search_cmd = app.add_subcommand("search", "Local search for hard type distributions (exploration only)");
    search_cmd->add_option("--n", c.n, "Agents")->required()->check(CLI::PositiveNumber);
    search_cmd->add_option("--k", c.k, "Slots")->required()->check(CLI::PositiveNumber);
    add_classes(search_cmd);
    search_cmd->add_option("--budget", c.search.budget, "Dual evaluations (default 20000)");
    search_cmd->add_option("--seed", c.search.seed, "Restart seed (default 1)");
    search_cmd->add_option("--types", c.search.types, "Types including the worthless one (default 3)");
    search_cmd->add_option("--step", c.search.step, "Coarse grid step (default 0.05)");
    search_cmd->add_option("--restarts", c.search.restarts, "Random starts (default 20)");
    add_output(search_cmd, true);
    commands.push_back({search_cmd, [&] {
        const noniid::SearchResult r = noniid::worst_case_search(c.n, c.k, c.policy, c.benchmark, c.search);
        const Table t{{"n", "k", "policy", "benchmark", "theta", "evaluations", "exhausted", "G", "certified"},
                      {{c.n, c.k, std::string(duals::to_string(c.policy)), std::string(duals::to_string(c.benchmark)), r.theta,
                        static_cast<long long>(r.evaluations), r.exhausted, g_string(r.g), certified(false)}}};
        return Output{t.render(c.format), {}};
    }});

    std::vector<const char*> argv{"prophetlab"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        configure_logging();
        for (const Command& cmd : commands) {
            if (!cmd.app->parsed()) continue;
            const Output o = cmd.body();
            if (c.out_path.empty()) {
                out << o.text;
            } else {
                write_atomic(c.out_path, o.text);
            }
            if (!o.svg.empty()) {
                std::string svg = c.svg_path;
                if (svg.empty() && !c.out_path.empty()) {
                    svg = std::filesystem::path(c.out_path).replace_extension(".svg").string();
                }
                if (!svg.empty()) write_atomic(svg, o.svg);
            }
        }
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace prophetlab::cli
