// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
// Command-line front end: topo, paths, run, sweep, report.
#include "spritz/errors.hpp"
#include "spritz/experiment.hpp"
#include "spritz/paths.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace spritz;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Command-line overrides layered on top of a config file.
struct Overrides {
    std::string config;
    std::optional<std::string> kind;
    std::optional<uint32_t> p, a, h, q;
    std::optional<std::string> scheme;
    std::optional<std::string> workload;
    std::optional<uint64_t> flow_bytes;
    std::optional<double> fail;
    std::optional<uint64_t> fail_seed;
    std::optional<uint64_t> seed;
    std::optional<double> time_limit_ns;
    std::optional<double> watchdog_s;
    std::optional<std::string> out;
};

void add_topology_flags(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--kind", o.kind, "dragonfly or slimfly");
    cmd->add_option("--p", o.p, "endpoints per switch");
    cmd->add_option("--a", o.a, "Dragonfly switches per group");
    cmd->add_option("--h", o.h, "Dragonfly global links per switch");
    cmd->add_option("--q", o.q, "Slim Fly prime power");
    cmd->add_option("--fail", o.fail, "fraction of switch links to fail");
    cmd->add_option("--fail-seed", o.fail_seed, "seed of the failure sample");
}

void add_run_flags(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    add_topology_flags(cmd, o);
    cmd->add_option("--scheme", o.scheme, "load-balancing scheme");
    cmd->add_option("--workload", o.workload, "workload kind");
    cmd->add_option("--flow-bytes", o.flow_bytes, "flow size for permutation-style workloads");
    cmd->add_option("--seed", o.seed, "experiment seed");
    cmd->add_option("--time-limit-ns", o.time_limit_ns, "simulated time limit");
    cmd->add_option("--watchdog", o.watchdog_s, "wall-clock limit in seconds (0 = off)");
}

// Builds the config as JSON so that overrides pass through the same
// validation as file values.
ExperimentConfig resolve(const Overrides &o) {
    json j = o.config.empty() ? json::object() : config_to_json(load_config(o.config));
    if (o.kind) {
        if (!j.contains("topology") || j["topology"].value("kind", "") != *o.kind)
            j["topology"] = json{{"kind", *o.kind}};
    }
    auto topo_set = [&](const char *key, const std::optional<uint32_t> &v) {
        if (v)
            j["topology"][key] = *v;
    };
    topo_set("p", o.p);
    topo_set("a", o.a);
    topo_set("h", o.h);
    topo_set("q", o.q);
    if (o.scheme)
        j["scheme"] = *o.scheme;
    if (o.workload)
        j["workload"]["kind"] = *o.workload;
    if (o.flow_bytes)
        j["workload"]["flow_bytes"] = *o.flow_bytes;
    if (o.fail)
        j["failures"]["fraction"] = *o.fail;
    if (o.fail_seed)
        j["failures"]["seed"] = *o.fail_seed;
    if (o.seed)
        j["seed"] = *o.seed;
    if (o.time_limit_ns)
        j["time_limit_ns"] = *o.time_limit_ns;
    if (o.watchdog_s)
        j["watchdog_s"] = *o.watchdog_s;
    if (o.out)
        j["output_dir"] = *o.out;
    return parse_config(j);
}

void write_text(const std::string &path, const std::string &text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path);
    f << text;
}

template <class T> std::vector<T> split_list(const std::string &s, const std::string &field, auto parse) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        out.push_back(parse(item, field));
    }
    return out;
}

int cmd_topo(const Overrides &o) {
    const ExperimentConfig cfg = resolve(o);
    const Topology topo = build_topology(cfg);
    write_text(o.out.value_or(""), topology_to_json(topo).dump(2) + "\n");
    if (o.out && *o.out != "-")
        std::cout << topo.describe() << "\n";
    return 0;
}

int cmd_paths(const Overrides &o, std::optional<uint32_t> src, std::optional<uint32_t> dst,
              std::optional<uint64_t> memory_endpoints, uint32_t paths_per_dest) {
    if (memory_endpoints) {
        const TopologyKind kind = o.kind.value_or("dragonfly") == "slimfly" ? TopologyKind::SlimFly
                                                                            : TopologyKind::Dragonfly;
        const MemoryEstimate m = memory_footprint(kind, *memory_endpoints, paths_per_dest);
        json j = {{"configuration", m.configuration},     {"endpoints", m.endpoints},
                  {"switches", m.switches},               {"paths_per_destination", m.paths_per_destination},
                  {"bytes", m.bytes},                     {"mib", double(m.bytes) / double(1 << 20)}};
        write_text(o.out.value_or(""), j.dump(2) + "\n");
        return 0;
    }
    const ExperimentConfig cfg = resolve(o);
    const Topology topo = build_topology(cfg);
    if (!src || !dst)
        throw ConfigError("paths", "--src and --dst switch ids are required");
    if (*src >= topo.switch_count() || *dst >= topo.switch_count())
        throw ConfigError("paths", "switch id out of range");
    WireParams wire;
    wire.link_gbps = cfg.network.link_gbps;
    wire.packet_bytes = cfg.transport.header_bytes + cfg.transport.payload_bytes;
    const EVList list = make_ev_list(topo, enumerate_bounded_paths(topo, *src, *dst), wire);
    const std::vector<double> weights = init_weights(list.latencies_ns, cfg.spritz.w_scale);
    json paths = json::array();
    for (size_t i = 0; i < list.size(); ++i)
        paths.push_back({{"ev1", list.entries[i].ev1},
                         {"ev2", list.entries[i].ev2},
                         {"switches", list.paths[i]},
                         {"local_hops", list.types[i].local_hops},
                         {"global_hops", list.types[i].global_hops},
                         {"category", to_string(list.types[i].category)},
                         {"latency_ns", list.latencies_ns[i]},
                         {"weight", weights[i]}});
    json j = {{"src", *src}, {"dst", *dst}, {"count", list.size()}, {"paths", paths}};
    write_text(o.out.value_or(""), j.dump(2) + "\n");
    return 0;
}

int cmd_run(const Overrides &o) {
    ExperimentConfig cfg = resolve(o);
    if (cfg.output_dir.empty())
        cfg.output_dir = default_output_dir(cell_name(cfg.scheme, cfg.seed));
    const ExperimentResult r = run_experiment(cfg, cfg.output_dir);
    std::cout << format_report(r.summary);
    std::cout << "output: " << cfg.output_dir << "\n";
    return 0;
}

int cmd_sweep(const Overrides &o, const std::string &schemes_arg, const std::string &seeds_arg, unsigned threads) {
    const ExperimentConfig base = resolve(o);
    std::vector<Scheme> schemes = all_schemes();
    if (schemes_arg != "all")
        schemes = split_list<Scheme>(schemes_arg, "schemes", [](const std::string &s, const std::string &f) {
            const auto v = parse_scheme(s);
            if (!v)
                throw ConfigError(f, "unknown scheme '" + s + "'");
            return *v;
        });
    const auto seeds = split_list<uint64_t>(seeds_arg, "seeds", [](const std::string &s, const std::string &f) {
        try {
            size_t pos = 0;
            const uint64_t v = std::stoull(s, &pos);
            if (pos != s.size())
                throw ConfigError(f, "bad seed '" + s + "'");
            return v;
        } catch (const std::logic_error &) {
            throw ConfigError(f, "bad seed '" + s + "'");
        }
    });
    const std::string root = base.output_dir.empty() ? default_output_dir("sweep") : base.output_dir;
    const auto cells = run_sweep(base, schemes, seeds, root, threads);
    bool all_ok = true;
    for (const auto &c : cells) {
        std::cout << (c.ok ? "ok     " : "FAILED ") << c.dir;
        if (!c.ok)
            std::cout << ": " << c.error;
        std::cout << "\n";
        all_ok = all_ok && c.ok;
    }
    return all_ok ? 0 : kExitRuntime;
}

int cmd_report(const std::vector<std::string> &targets) {
    for (const auto &t : targets) {
        std::filesystem::path p(t);
        if (std::filesystem::is_directory(p))
            p /= "summary.json";
        std::ifstream f(p);
        if (!f)
            throw ConfigError("report", "cannot open " + p.string());
        json j;
        try {
            f >> j;
        } catch (const json::parse_error &) {
            throw ConfigError("report", p.string() + ": invalid JSON");
        }
        if (targets.size() > 1)
            std::cout << "== " << p.parent_path().string() << "\n";
        std::cout << format_report(j);
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Packet-level simulator for source-guided load balancing on low-diameter networks"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);

    Overrides topo_o, paths_o, run_o, sweep_o;

    auto *topo = app.add_subcommand("topo", "build a topology and export it as JSON");
    topo->add_option("--config", topo_o.config, "JSON experiment config")->check(CLI::ExistingFile);
    add_topology_flags(topo, topo_o);
    topo->add_option("--out", topo_o.out, "output file (default stdout)");

    std::optional<uint32_t> src, dst;
    std::optional<uint64_t> memory_endpoints;
    uint32_t paths_per_dest = 200;
    auto *paths = app.add_subcommand("paths", "list bounded paths between two switches or estimate table memory");
    paths->add_option("--config", paths_o.config, "JSON experiment config")->check(CLI::ExistingFile);
    add_topology_flags(paths, paths_o);
    paths->add_option("--src", src, "source switch");
    paths->add_option("--dst", dst, "destination switch");
    paths->add_option("--memory", memory_endpoints, "estimate endpoint-table memory for this many endpoints");
    paths->add_option("--paths-per-dest", paths_per_dest, "entries per destination for --memory");
    paths->add_option("--out", paths_o.out, "output file (default stdout)");

    auto *run = app.add_subcommand("run", "run one experiment");
    add_run_flags(run, run_o);
    run->add_option("--out", run_o.out, "output directory");

    std::string schemes_arg = "all", seeds_arg = "1";
    unsigned threads = 1;
    auto *sweep = app.add_subcommand("sweep", "run every scheme x seed combination");
    add_run_flags(sweep, sweep_o);
    sweep->add_option("--schemes", schemes_arg, "comma-separated schemes, or 'all'");
    sweep->add_option("--seeds", seeds_arg, "comma-separated seeds");
    sweep->add_option("--threads", threads, "concurrent cells")->check(CLI::PositiveNumber);
    sweep->add_option("--out", sweep_o.out, "root directory of the sweep");

    std::vector<std::string> report_targets;
    auto *report = app.add_subcommand("report", "print the summary table of finished runs");
    report->add_option("runs", report_targets, "run directories or summary.json files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*topo)
            return cmd_topo(topo_o);
        if (*paths)
            return cmd_paths(paths_o, src, dst, memory_endpoints, paths_per_dest);
        if (*run)
            return cmd_run(run_o);
        if (*sweep)
            return cmd_sweep(sweep_o, schemes_arg, seeds_arg, threads);
        if (*report)
            return cmd_report(report_targets);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InvalidParameter &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
