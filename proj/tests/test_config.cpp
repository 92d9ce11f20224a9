// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/errors.hpp"
#include "spritz/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace spritz;
using nlohmann::json;

namespace {

std::string read(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string &leaf) {
    const auto p = std::filesystem::temp_directory_path() / ("spritz_cfg_" + leaf);
    std::filesystem::remove_all(p);
    return p;
}

// Small, fast experiment.
json small() {
    return json{{"topology", {{"kind", "dragonfly"}, {"p", 2}, {"a", 4}, {"h", 2}}},
                {"workload", {{"kind", "permutation"}, {"flow_bytes", 65536}}}};
}

std::string error_field(const json &j) {
    try {
        parse_config(j);
    } catch (const ConfigError &e) {
        return e.field();
    }
    return "";
}

} // namespace

TEST(Config, DefaultsMatchSimulationParameters) {
    const ExperimentConfig c = parse_config(json::object());
    EXPECT_EQ(c.topology.kind, TopologyKind::Dragonfly);
    EXPECT_EQ(c.topology.dragonfly.p, 4u);
    EXPECT_EQ(c.topology.dragonfly.a, 8u);
    EXPECT_EQ(c.topology.dragonfly.h, 4u);
    EXPECT_EQ(c.topology.slimfly.q, 9u);
    EXPECT_EQ(c.topology.slimfly.p, 7u);
    EXPECT_EQ(c.network.link_gbps, 400.0);
    EXPECT_EQ(c.network.switch_latency, from_ns(500));
    EXPECT_EQ(c.network.ecn_kmin, 0.2);
    EXPECT_EQ(c.network.ecn_kmax, 0.8);
    EXPECT_EQ(c.transport.payload_bytes, 4096u);
    EXPECT_EQ(c.transport.header_bytes, 64u);
    EXPECT_EQ(c.spritz.explore_threshold, 44u);
    EXPECT_EQ(c.spritz.ecn_threshold, 8u);
    EXPECT_EQ(c.spritz.buffer_size, 8u);
    EXPECT_EQ(c.spritz.w_scale, 3.0);
    EXPECT_EQ(c.time_limit, from_ns(1e9));
    EXPECT_EQ(c.watchdog_s, 0.0);
    EXPECT_EQ(c.failures.fraction, 0.0);
}

TEST(Config, UnknownKeysRejectedWithPath) {
    EXPECT_EQ(error_field(json{{"bogus", 1}}), "bogus");
    EXPECT_EQ(error_field(json{{"spritz", {{"explore", 3}}}}), "spritz.explore");
    EXPECT_EQ(error_field(json{{"workload", {{"collective", {{"size", 3}}}}}}), "workload.collective.size");
    EXPECT_EQ(error_field(json{{"topology", {{"kind", "slimfly"}, {"a", 3}}}}), "topology.a");
}

TEST(Config, TypeAndRangeErrors) {
    EXPECT_EQ(error_field(json{{"seed", "one"}}), "seed");
    EXPECT_EQ(error_field(json{{"seed", -1}}), "seed");
    EXPECT_EQ(error_field(json{{"spritz", {{"buffer_size", 1.5}}}}), "spritz.buffer_size");
    EXPECT_EQ(error_field(json{{"failures", {{"fraction", 2.0}}}}), "failures.fraction");
    EXPECT_EQ(error_field(json{{"network", {{"trimming", 1}}}}), "network.trimming");
    EXPECT_EQ(error_field(json{{"network", {{"ecn_kmin", 0.9}}}}), "network.ecn_kmin");
    EXPECT_EQ(error_field(json{{"scheme", "spray"}}), "scheme");
    EXPECT_EQ(error_field(json{{"workload", {{"kind", "bulk"}}}}), "workload.kind");
    EXPECT_EQ(error_field(json{{"topology", {{"kind", "torus"}}}}), "topology.kind");
    EXPECT_EQ(error_field(json{{"topology", 3}}), "topology");
    EXPECT_EQ(error_field(json::array()), "config");
}

TEST(Config, OverridesApplyIndividually) {
    const ExperimentConfig c = parse_config(json{{"spritz", {{"explore_threshold", 10}}}, {"scheme", "scout"}});
    EXPECT_EQ(c.spritz.explore_threshold, 10u);
    EXPECT_EQ(c.spritz.ecn_threshold, 8u);
    EXPECT_EQ(c.scheme, Scheme::Scout);
}

TEST(Config, ResolvedJsonRoundTrips) {
    json j = small();
    j["scheme"] = "flicr";
    j["failures"] = {{"fraction", 0.05}, {"seed", 9}};
    j["workload"]["motivational"] = {{"dst", 12}};
    j["workload"]["incast"] = {{"senders", 3}};
    j["time_limit_ns"] = 12345.678;
    const ExperimentConfig c = parse_config(j);
    const json resolved = config_to_json(c);
    EXPECT_EQ(config_to_json(parse_config(resolved)), resolved);
    EXPECT_EQ(resolved["workload"]["motivational"]["dst"], 12);
    EXPECT_EQ(resolved["workload"]["incast"]["senders"], 3);
    EXPECT_TRUE(resolved["workload"]["incast"]["receiver"].is_null());
    EXPECT_EQ(parse_config(resolved).time_limit, from_ns(12345.678));
}

TEST(Config, LoadFromFile) {
    const auto dir = scratch("load");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "ok.json") << small().dump();
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_EQ(load_config((dir / "ok.json").string()).topology.dragonfly.a, 4u);
    EXPECT_THROW(load_config((dir / "bad.json").string()), ConfigError);
    EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(Experiment, BuildsEveryWorkload) {
    ExperimentConfig c = parse_config(small());
    const Topology topo = build_topology(c);
    for (auto k : {WorkloadKind::Permutation, WorkloadKind::Adversarial, WorkloadKind::IncastBystanders,
                   WorkloadKind::Collective, WorkloadKind::Trace}) {
        c.workload.kind = k;
        c.workload.collective.participants = 8;
        c.workload.trace.duration = from_ns(20'000);
        EXPECT_FALSE(build_workload(c, topo).empty()) << to_string(k);
    }
    c.workload.kind = WorkloadKind::Motivational;
    EXPECT_FALSE(build_workload(c, topo).empty());
    EXPECT_TRUE(simulation_config(c).stop_after_monitored);
    c.workload.kind = WorkloadKind::Schedule;
    EXPECT_THROW(build_workload(c, topo), ConfigError);
}

TEST(Experiment, ScheduleFileWorkload) {
    const auto dir = scratch("sched");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "s.json") << R"({"flows":[{"src":0,"dst":9,"bytes":8192},{"src":9,"dst":0,"bytes":4096,"depends_on":[0]}]})";
    json j = small();
    j["workload"] = {{"kind", "schedule"}, {"schedule", (dir / "s.json").string()}};
    const auto r = run_experiment(parse_config(j));
    EXPECT_TRUE(r.run.completed);
    EXPECT_EQ(r.run.flows.size(), 2u);
    EXPECT_GE(r.run.flows[1].start, r.run.flows[0].end);
    std::filesystem::remove_all(dir);
}

TEST(Experiment, FailuresAreApplied) {
    json j = small();
    j["failures"] = {{"fraction", 0.1}, {"seed", 3}};
    const Topology topo = build_topology(parse_config(j));
    EXPECT_GT(topo.failed_link_count(), 0u);
    EXPECT_EQ(topology_to_json(topo)["failed_links"], topo.failed_link_count());
}

TEST(Experiment, TopologyExportShape) {
    const Topology topo = build_topology(parse_config(small()));
    const json t = topology_to_json(topo);
    EXPECT_EQ(t["switches"], 36);
    EXPECT_EQ(t["endpoints"], 72);
    EXPECT_EQ(t["groups"], 9);
    EXPECT_EQ(t["nodes"].size(), 36u);
    EXPECT_EQ(t["links"].size(), topo.links().size());
    EXPECT_EQ(t["parameters"]["a"], 4);
    for (const auto &l : t["links"]) {
        EXPECT_TRUE(l.contains("propagation_ns"));
        EXPECT_TRUE(l.contains("up"));
    }
}

TEST(Experiment, ExportIsByteIdenticalAcrossRuns) {
    const auto dir = scratch("det");
    json j = small();
    j["scheme"] = "spray_w";
    const ExperimentConfig c = parse_config(j);
    run_experiment(c, (dir / "a").string());
    run_experiment(c, (dir / "b").string());
    EXPECT_EQ(read(dir / "a" / "flows.csv"), read(dir / "b" / "flows.csv"));
    EXPECT_EQ(read(dir / "a" / "summary.json"), read(dir / "b" / "summary.json"));
    const json s = json::parse(read(dir / "a" / "summary.json"));
    EXPECT_EQ(s["schema_version"], kSummarySchemaVersion);
    EXPECT_EQ(s["config"], config_to_json(c));
    std::filesystem::remove_all(dir);
}

TEST(Experiment, MinimalStallsUnderFailures) {
    json j = small();
    j["scheme"] = "minimal";
    j["failures"] = {{"fraction", 0.1}, {"seed", 3}};
    j["time_limit_ns"] = 500'000;
    const auto r = run_experiment(parse_config(j));
    EXPECT_FALSE(r.run.completed);
    EXPECT_FALSE(r.summary["completed"].get<bool>());
}

TEST(Sweep, CrossProductAndPerCellDeterminism) {
    const auto dir = scratch("sweep");
    const ExperimentConfig base = parse_config(small());
    const auto cells = run_sweep(base, {Scheme::Ecmp, Scheme::SprayU}, {1, 2, 3}, dir.string(), 2);
    ASSERT_EQ(cells.size(), 6u);
    for (const auto &c : cells) {
        EXPECT_TRUE(c.ok) << c.error;
        EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.dir) / "flows.csv"));
        ExperimentConfig one = base;
        one.scheme = c.scheme;
        one.seed = c.seed;
        one.output_dir = c.dir;
        run_experiment(one, (dir / "rerun").string());
        EXPECT_EQ(read(std::filesystem::path(c.dir) / "flows.csv"), read(dir / "rerun" / "flows.csv"));
        EXPECT_EQ(read(std::filesystem::path(c.dir) / "summary.json"), read(dir / "rerun" / "summary.json"));
    }
    EXPECT_EQ(std::filesystem::path(cells[0].dir).filename(), "ecmp_seed1");
    std::filesystem::remove_all(dir);
}

TEST(Sweep, EveryScheme) {
    const auto dir = scratch("all");
    const auto cells = run_sweep(parse_config(small()), all_schemes(), {1}, dir.string(), 1);
    EXPECT_EQ(cells.size(), 10u);
    size_t dirs = 0;
    for (const auto &e : std::filesystem::directory_iterator(dir))
        dirs += e.is_directory();
    EXPECT_EQ(dirs, 10u);
    std::filesystem::remove_all(dir);
}

TEST(Sweep, FailingCellDoesNotStopOthers) {
    const auto dir = scratch("fail");
    json j = small();
    // More participants than endpoints: every cell fails, and each one is still attempted.
    j["workload"] = {{"kind", "collective"}, {"collective", {{"participants", 1000}}}};
    const auto cells = run_sweep(parse_config(j), {Scheme::Ecmp, Scheme::Scout}, {1}, dir.string(), 1);
    ASSERT_EQ(cells.size(), 2u);
    for (const auto &c : cells) {
        EXPECT_FALSE(c.ok);
        EXPECT_FALSE(c.error.empty());
    }
    EXPECT_THROW(run_sweep(parse_config(small()), {}, {1}, dir.string(), 1), ConfigError);
    EXPECT_THROW(run_sweep(parse_config(small()), {Scheme::Ecmp}, {}, dir.string(), 1), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(Experiment, OutputRootFromEnvironment) {
    ::setenv("SPRITZ_OUTPUT_ROOT", "/tmp/somewhere", 1);
    EXPECT_EQ(default_output_dir("x"), "/tmp/somewhere/x");
    ::unsetenv("SPRITZ_OUTPUT_ROOT");
    EXPECT_EQ(default_output_dir("x"), "results/x");
    EXPECT_EQ(cell_name(Scheme::UgalL, 7), "ugal_l_seed7");
}
