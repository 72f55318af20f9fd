// Command-line driver for the knnrgg experiments.
//
// Every subcommand writes its results into --out (a directory). Files carry
// the version, master seed and parameters but never timing or the worker
// count, so reruns with any --workers produce identical bytes. Timing goes to
// stderr.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "knnrgg/knnrgg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace knnrgg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitUnmeasurable = 3;

struct Options {
    std::vector<int> k{2};
    int m_param = 8;
    std::vector<double> n_param;
    double eps = 0.4;
    double net_eps = 0.05;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out = ".";
    std::string kind = "A";
    std::vector<double> c{0.2, 0.8};
    std::uint64_t iterations = 20000;
    unsigned restarts = 1;
    std::string init;
    bool type_b = false;
    bool ignore_type_a = false;
    std::string config;
    std::string input;
};

// Flags given on the command line win; anything else may come from --config.
struct Binding {
    CLI::Option* option;
    std::string key;
    std::function<void(const json&)> assign;
};

template <class T>
std::vector<T> as_list(const json& j) {
    if (j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
}

class Command {
public:
    Command(CLI::App& app, std::string name, std::string help, Options& o)
        : sub_(app.add_subcommand(std::move(name), std::move(help))), o_(o) {
        sub_->add_option("--config", o_.config, "JSON file mirroring the flags");
        bind("--seed", "seed", o_.seed, "master seed");
        bind("--workers", "workers", o_.workers, "worker threads");
        bind("--out", "out", o_.out, "output directory");
    }

    CLI::App* app() const noexcept { return sub_; }

    template <class T>
    Command& bind(const std::string& flag, const std::string& key, T& target, const std::string& help) {
        auto* opt = sub_->add_option(flag, target, help)->capture_default_str();
        bindings_.push_back({opt, key, [&target](const json& j) {
                                 if constexpr (requires { typename T::value_type; } &&
                                               !std::is_same_v<T, std::string>) {
                                     target = as_list<typename T::value_type>(j);
                                 } else {
                                     target = j.get<T>();
                                 }
                             }});
        return *this;
    }

    Command& flag(const std::string& name, const std::string& key, bool& target, const std::string& help) {
        auto* opt = sub_->add_flag(name, target, help);
        bindings_.push_back({opt, key, [&target](const json& j) { target = j.get<bool>(); }});
        return *this;
    }

    void apply_config() const {
        if (o_.config.empty()) return;
        const json file = json::parse(read_text(o_.config));
        if (!file.is_object()) throw std::invalid_argument("config file must hold a JSON object");
        for (const auto& b : bindings_) {
            if (b.option->count() == 0 && file.contains(b.key)) b.assign(file.at(b.key));
        }
    }

private:
    CLI::App* sub_;
    Options& o_;
    std::vector<Binding> bindings_;
};

void log_time(const std::string& what, std::chrono::steady_clock::time_point start) {
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "%s: %.1f ms\n", what.c_str(), ms);
}

std::string out_path(const Options& o, const std::string& file) {
    fs::create_directories(o.out);
    return (fs::path(o.out) / file).string();
}

void write_outputs(const Options& o, const std::string& stem, const RunHeader& header, const json& body,
                   const Table& table) {
    json doc = header.to_json();
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    write_text(out_path(o, stem + ".json"), doc.dump(2) + "\n");
    write_text(out_path(o, stem + ".csv"), to_csv(table, header));
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : "unmeasurable"; }
json optional_json(const std::optional<double>& v) { return v ? real_json(*v) : json(nullptr); }

int positive_int(double v, const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument(std::string(what) + " must be a positive integer");
    return static_cast<int>(v);
}

void require_trials(const Options& o) {
    if (o.trials < 1) throw std::invalid_argument("--trials must be >= 1");
}

// --- subcommands ------------------------------------------------------------

int run_sample(const Options& o) {
    const int k = o.k.at(0);
    RunHeader header{"sample", o.seed, {{"kind", o.kind}, {"k", k}, {"m-param", o.m_param}}};
    PointSet points;
    json body;
    if (o.kind == "disc") {
        const auto regions = event_regions(EventSpec{EventKind::A, o.m_param, k});
        const auto cond = sample_disc_conditioned(k, regions.outer, Point{0.0, 0.0}, o.seed);
        points = cond.points;
        body["d1_attempts"] = cond.d1_attempts;
        body["condition_iii"] = check_condition_III(points, k, Point{0.0, 0.0}, o.net_eps);
    } else {
        const EventSpec spec{parse_event_kind(o.kind), o.m_param, k};
        points = sample_poisson(event_regions(spec).outer, 1.0, o.seed);
        const KnnGraph graph = build_knn_graph(points, k, 0.0, o.workers);
        std::size_t count = 0;
        component_labels(graph, &count);
        body["components"] = count;
        body["small_component"] = event_small_component(graph, spec);
    }
    const Rect r = points.region();
    body["count"] = points.size();
    body["region"] = {r.xmin, r.xmax, r.ymin, r.ymax};
    Table table{{"x", "y"}, {}};
    for (const auto& p : points.points()) table.rows.push_back({format_real(p.x), format_real(p.y)});
    write_outputs(o, "sample", header, body, table);
    return kExitOk;
}

int run_estimate_event(const Options& o) {
    require_trials(o);
    const EventKind kind = parse_event_kind(o.kind);
    RunHeader header{"estimate-event", o.seed,
                     {{"kind", std::string(to_string(kind))}, {"k", o.k}, {"m-param", o.m_param}, {"trials", o.trials}}};
    json rows = json::array();
    Table table{{"kind", "M", "k", "trials", "successes", "p_hat", "ci_low", "ci_high"}, {}};
    for (int k : o.k) {
        const auto start = std::chrono::steady_clock::now();
        const auto r = estimate_event(EventSpec{kind, o.m_param, k}, o.trials, o.seed, o.workers);
        log_time("estimate-event k=" + std::to_string(k), start);
        rows.push_back({{"kind", std::string(to_string(kind))}, {"M", o.m_param}, {"k", k}, {"trials", r.trials},
                        {"successes", r.successes}, {"p_hat", r.p_hat}, {"ci_low", r.ci.low}, {"ci_high", r.ci.high}});
        table.rows.push_back({std::string(to_string(kind)), std::to_string(o.m_param), std::to_string(k),
                              std::to_string(r.trials), std::to_string(r.successes), format_real(r.p_hat),
                              format_real(r.ci.low), format_real(r.ci.high)});
    }
    write_outputs(o, "estimate-event", header, {{"rows", rows}}, table);
    return kExitOk;
}

int run_estimate_f(const Options& o) {
    require_trials(o);
    RunHeader header{"estimate-f", o.seed, {{"k", o.k}, {"m-param", o.m_param}, {"trials", o.trials}}};
    const auto start = std::chrono::steady_clock::now();
    const auto result = estimate_f(o.k, o.m_param, o.trials, o.seed, o.workers);
    log_time("estimate-f", start);
    json rows = json::array();
    Table table{{"k", "trials", "successes1", "p1", "p1_low", "p1_high", "f1", "f1_low", "f1_high", "successes2",
                 "p2", "p2_low", "p2_high", "f2", "f2_low", "f2_high"},
                {}};
    for (const auto& row : result) {
        json j{{"k", row.k}, {"trials", row.f1.p.trials}};
        std::vector<std::string> cells{std::to_string(row.k), std::to_string(row.f1.p.trials)};
        for (const auto& [tag, est] : {std::pair{"1", &row.f1}, std::pair{"2", &row.f2}}) {
            const std::string t = tag;
            j["successes" + t] = est->p.successes;
            j["p" + t] = est->p.p_hat;
            j["p" + t + "_low"] = est->p.ci.low;
            j["p" + t + "_high"] = est->p.ci.high;
            j["f" + t] = optional_json(est->f_hat);
            j["f" + t + "_low"] = real_json(est->f_ci.low);
            j["f" + t + "_high"] = real_json(est->f_ci.high);
            cells.insert(cells.end(), {std::to_string(est->p.successes), format_real(est->p.p_hat),
                                       format_real(est->p.ci.low), format_real(est->p.ci.high),
                                       optional_real(est->f_hat), format_real(est->f_ci.low),
                                       format_real(est->f_ci.high)});
        }
        rows.push_back(j);
        table.rows.push_back(cells);
    }
    write_outputs(o, "estimate-f", header, {{"rows", rows}}, table);
    if (any_unmeasurable(result)) {
        std::fprintf(stderr, "estimate-f: some rates are unmeasurable (no successes)\n");
        return kExitUnmeasurable;
    }
    return kExitOk;
}

int run_connectivity_curve(const Options& o) {
    require_trials(o);
    if (o.n_param.empty()) throw std::invalid_argument("connectivity-curve needs --n-param (list of n)");
    RunHeader header{"connectivity-curve", o.seed, {{"n", o.n_param}, {"c", o.c}, {"trials", o.trials}}};
    const auto start = std::chrono::steady_clock::now();
    const auto points = connectivity_curve(o.n_param, o.c, o.trials, o.seed, o.workers);
    log_time("connectivity-curve", start);
    json rows = json::array();
    Table table{{"n", "c", "k", "trials", "successes", "p_connected", "ci_low", "ci_high"}, {}};
    for (const auto& p : points) {
        const auto& e = p.p_connected;
        rows.push_back({{"n", p.n}, {"c", p.c}, {"k", p.k}, {"trials", e.trials}, {"successes", e.successes},
                        {"p_connected", e.p_hat}, {"ci_low", e.ci.low}, {"ci_high", e.ci.high}});
        table.rows.push_back({format_real(p.n), format_real(p.c), std::to_string(p.k), std::to_string(e.trials),
                              std::to_string(e.successes), format_real(e.p_hat), format_real(e.ci.low),
                              format_real(e.ci.high)});
    }
    write_outputs(o, "connectivity-curve", header, {{"rows", rows}}, table);
    return kExitOk;
}

int run_disc_bound(const Options& o) {
    require_trials(o);
    RunHeader header{"disc-bound", o.seed,
                     {{"k", o.k}, {"m-param", o.m_param}, {"trials", o.trials}, {"net-eps", o.net_eps}}};
    json rows = json::array();
    Table table{{"k", "M", "trials", "p_I", "log_p_II", "iii_successes", "p_III_hat", "p_III_low", "p_III_high",
                 "log_p1_lower", "f1_upper"},
                {}};
    bool unmeasurable = false;
    for (int k : o.k) {
        const auto start = std::chrono::steady_clock::now();
        const auto r = disc_construction_bound(k, o.m_param, o.trials, o.seed, o.net_eps, o.workers);
        log_time("disc-bound k=" + std::to_string(k), start);
        unmeasurable = unmeasurable || r.iii_successes == 0;
        rows.push_back({{"k", k}, {"M", o.m_param}, {"trials", r.trials}, {"p_I", r.p_I}, {"log_p_II", r.log_p_II},
                        {"p_II", r.p_II}, {"iii_successes", r.iii_successes}, {"p_III_hat", r.p_III_hat},
                        {"p_III_low", r.p_III_ci.low}, {"p_III_high", r.p_III_ci.high},
                        {"log_p1_lower", real_json(r.log_p1_lower)}, {"f1_upper", real_json(r.f1_upper)}});
        table.rows.push_back({std::to_string(k), std::to_string(o.m_param), std::to_string(r.trials),
                              format_real(r.p_I), format_real(r.log_p_II), std::to_string(r.iii_successes),
                              format_real(r.p_III_hat), format_real(r.p_III_ci.low), format_real(r.p_III_ci.high),
                              format_real(r.log_p1_lower), format_real(r.f1_upper)});
    }
    write_outputs(o, "disc-bound", header, {{"rows", rows}}, table);
    if (unmeasurable) {
        std::fprintf(stderr, "disc-bound: condition (III) never held; the bound is unmeasurable\n");
        return kExitUnmeasurable;
    }
    return kExitOk;
}

int run_theta_search(const Options& o) {
    ThetaSearchParams p;
    p.M = o.m_param;
    p.N = o.n_param.empty() ? 8 : positive_int(o.n_param.front(), "--n-param");
    p.k = o.k.at(0);
    p.eps = o.eps;
    p.iterations = o.iterations;
    p.restarts = o.restarts;
    p.workers = o.workers;
    p.seed = o.seed;
    p.enforce_type_a = !o.ignore_type_a;
    p.enforce_type_b = o.type_b;
    json params{{"m-param", p.M}, {"n-param", p.N}, {"k", p.k}, {"eps", p.eps}, {"iterations", p.iterations},
                {"restarts", p.restarts}, {"type-b", p.enforce_type_b}, {"ignore-type-a", o.ignore_type_a}};
    if (!o.init.empty()) {
        auto [config, T] = configuration_from_json(json::parse(read_text(o.init)));
        p.initial = SeedConfiguration{std::move(config), std::move(T)};
        params["init"] = configuration_to_json(p.initial->config, p.initial->T);
    }
    RunHeader header{"theta-search", o.seed, params};
    const auto start = std::chrono::steady_clock::now();
    const auto res = optimize_theta(p);
    log_time("theta-search", start);

    json body{{"theta_star", res.theta_star},
              {"theta_start", res.theta_start},
              {"restart_theta", res.restart_theta},
              {"proposed", res.proposed},
              {"accepted", res.accepted},
              {"certified", small_component_certificate(res.config, res.T)},
              {"type_a", is_type_A(res.config)},
              {"configuration", configuration_to_json(res.config, res.T)},
              {"start_configuration", configuration_to_json(res.start.config, res.start.T)}};
    Table table{{"restart", "theta"}, {}};
    for (std::size_t r = 0; r < res.restart_theta.size(); ++r) {
        table.rows.push_back({std::to_string(r), format_real(res.restart_theta[r])});
    }
    write_outputs(o, "theta-search", header, body, table);

    std::string log = "# version=" + std::string(kVersion) + " seed=" + std::to_string(o.seed) + "\n";
    for (const auto& line : res.log) log += line + "\n";
    log += "theta_start=" + format_real(res.theta_start) + " theta_star=" + format_real(res.theta_star) + "\n";
    write_text(out_path(o, "theta-search.log"), log);
    return kExitOk;
}

// --- plot -----------------------------------------------------------------

PlotSeries series_from(const json& rows, const std::string& label, const std::string& x, const std::string& y,
                       const std::string& lo, const std::string& hi) {
    PlotSeries s{label, {}, {}, {}, {}};
    for (const auto& r : rows) {
        s.x.push_back(real_from_json(r.at(x)));
        s.y.push_back(r.at(y).is_null() ? std::numeric_limits<double>::quiet_NaN() : real_from_json(r.at(y)));
        s.low.push_back(real_from_json(r.at(lo)));
        s.high.push_back(real_from_json(r.at(hi)));
    }
    return s;
}

Table series_table(const std::vector<PlotSeries>& series) {
    Table t{{"series", "x", "y", "low", "high"}, {}};
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            t.rows.push_back({s.label, format_real(s.x[i]), format_real(s.y[i]), format_real(s.low[i]),
                              format_real(s.high[i])});
        }
    }
    return t;
}

int run_plot(const Options& o) {
    if (o.input.empty()) throw std::invalid_argument("plot needs a results file");
    if (!fs::exists(o.input)) {
        std::fprintf(stderr, "plot: results file not found: %s\n", o.input.c_str());
        return kExitInvalid;
    }
    const json doc = json::parse(read_text(o.input));
    const std::string command = doc.value("command", "");
    const json rows = doc.value("rows", json::array());
    RunHeader header{"plot", doc.value("seed", std::uint64_t{0}),
                     {{"source_command", command}, {"source_params", doc.value("params", json::object())}}};

    std::vector<std::pair<std::string, PlotSpec>> plots;
    if (command == "estimate-f") {
        plots.push_back({"p-vs-k", PlotSpec{"event probability", "k", "p", true,
                                            {series_from(rows, "p1 (A)", "k", "p1", "p1_low", "p1_high"),
                                             series_from(rows, "p2 (B)", "k", "p2", "p2_low", "p2_high")}}});
        plots.push_back({"f-vs-k", PlotSpec{"decay rate", "k", "f = -log(p)/k", false,
                                            {series_from(rows, "f1 (A)", "k", "f1", "f1_low", "f1_high"),
                                             series_from(rows, "f2 (B)", "k", "f2", "f2_low", "f2_high")}}});
    } else if (command == "estimate-event") {
        plots.push_back({"p-vs-k", PlotSpec{"event probability", "k", "p", true,
                                            {series_from(rows, "p_hat", "k", "p_hat", "ci_low", "ci_high")}}});
    } else if (command == "connectivity-curve") {
        std::map<double, json> by_n;
        for (const auto& r : rows) {
            auto& bucket = by_n[real_from_json(r.at("n"))];
            if (bucket.is_null()) bucket = json::array();
            bucket.push_back(r);
        }
        PlotSpec spec{"P(connected)", "c (k = floor(c log n))", "p_connected", false, {}};
        for (const auto& [n, group] : by_n) {
            spec.series.push_back(series_from(group, "n=" + format_real(n), "c", "p_connected", "ci_low", "ci_high"));
        }
        plots.push_back({"connectivity-curve", spec});
    } else if (command == "disc-bound") {
        plots.push_back({"p3-vs-k", PlotSpec{"condition (III) frequency", "k", "p_III", false,
                                             {series_from(rows, "p_III", "k", "p_III_hat", "p_III_low", "p_III_high")}}});
    } else {
        throw std::invalid_argument("plot: unsupported results (command '" + command + "')");
    }
    for (const auto& [stem, spec] : plots) {
        write_text(out_path(o, stem + ".svg"), render_svg(spec, header));
        write_text(out_path(o, stem + ".csv"), to_csv(series_table(spec.series), header));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-nearest-neighbour random geometric graph experiments"};
    app.require_subcommand(1);
    Options o;

    Command sample(app, "sample", "draw one point set and write it as CSV", o);
    sample.bind("--kind", "kind", o.kind, "A, A', B, B' or disc").bind("--k", "k", o.k, "k")
        .bind("--m-param", "m-param", o.m_param, "M").bind("--net-eps", "net-eps", o.net_eps, "condition (III) net");

    Command event(app, "estimate-event", "Monte Carlo probability of a small-component event", o);
    event.bind("--kind", "kind", o.kind, "A, A', B or B'").bind("--k", "k", o.k, "k values")
        .bind("--m-param", "m-param", o.m_param, "M").bind("--trials", "trials", o.trials, "trials per k");

    Command rates(app, "estimate-f", "decay rates f1, f2 over a list of k", o);
    rates.bind("--k", "k", o.k, "k values").bind("--m-param", "m-param", o.m_param, "M")
        .bind("--trials", "trials", o.trials, "trials per k and event");

    Command curve(app, "connectivity-curve", "P(G_{n,k} connected) for k = floor(c log n)", o);
    curve.bind("--n-param", "n-param", o.n_param, "n values").bind("--c", "c", o.c, "c values")
        .bind("--trials", "trials", o.trials, "trials per n");

    Command disc(app, "disc-bound", "three-disc lower bound on p1(k)", o);
    disc.bind("--k", "k", o.k, "k values").bind("--m-param", "m-param", o.m_param, "M")
        .bind("--trials", "trials", o.trials, "condition (III) samples").bind("--net-eps", "net-eps", o.net_eps, "net spacing");

    Command theta_cmd(app, "theta-search", "minimize theta over certified configurations", o);
    theta_cmd.bind("--m-param", "m-param", o.m_param, "M").bind("--n-param", "n-param", o.n_param, "N")
        .bind("--k", "k", o.k, "k").bind("--eps", "eps", o.eps, "Type B epsilon")
        .bind("--iterations", "iterations", o.iterations, "annealing steps per restart")
        .bind("--restarts", "restarts", o.restarts, "independent restarts")
        .bind("--init", "init", o.init, "initial configuration JSON")
        .flag("--type-b", "type-b", o.type_b, "also reject Type B configurations")
        .flag("--ignore-type-a", "ignore-type-a", o.ignore_type_a, "allow Type A labels");

    Command plot(app, "plot", "SVG plots and CSV mirrors from a results JSON", o);
    plot.app()->add_option("input", o.input, "results JSON")->required();

    const std::vector<std::pair<Command*, std::function<int(const Options&)>>> handlers{
        {&sample, run_sample},         {&event, run_estimate_event}, {&rates, run_estimate_f},
        {&curve, run_connectivity_curve}, {&disc, run_disc_bound},     {&theta_cmd, run_theta_search},
        {&plot, run_plot}};

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }
    try {
        for (const auto& [cmd, handler] : handlers) {
            if (!cmd->app()->parsed()) continue;
            cmd->apply_config();
            if (o.k.empty()) throw std::invalid_argument("--k needs at least one value");
            return handler(o);
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kExitInvalid;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kExitInvalid;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitInvalid;
}
