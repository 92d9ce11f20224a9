// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/engine.hpp"
#include "spritz/workloads.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spritz {

struct TopologyConfig {
    TopologyKind kind = TopologyKind::Dragonfly;
    DragonflyParams dragonfly;
    SlimFlyParams slimfly;
    LinkLatencies latencies;
};

enum class WorkloadKind : uint8_t { Permutation, Adversarial, Motivational, IncastBystanders, Collective, Trace, Schedule };

const char *to_string(WorkloadKind k);
std::optional<WorkloadKind> parse_workload_kind(const std::string &s);

struct CollectiveConfig {
    CollectiveAlgorithm algorithm = CollectiveAlgorithm::AllreduceRing;
    uint32_t participants = 128;
    uint64_t message_bytes = 4 * kMiB;
    uint32_t parallel = 8;
    uint64_t background_bytes = 4 * kMiB;
};

struct TraceConfig {
    std::string cdf; // empty: bundled web-search distribution
    double load = 1.0;
    SimTime duration = 1'000'000'000;
    uint32_t max_senders_per_receiver = 4;
};

struct WorkloadConfig {
    WorkloadKind kind = WorkloadKind::Permutation;
    uint64_t flow_bytes = 4 * kMiB;
    bool cross_group = true;
    MotivationalParams motivational;
    std::optional<uint32_t> incast_senders;
    std::optional<EndpointId> incast_receiver;
    CollectiveConfig collective;
    TraceConfig trace;
    std::string schedule; // path of a JSON schedule
};

struct FailureConfig {
    double fraction = 0.0;
    uint64_t seed = 1;
};

struct ExperimentConfig {
    TopologyConfig topology;
    Scheme scheme = Scheme::SprayW;
    WorkloadConfig workload;
    NetworkParams network;
    TransportParams transport;
    SpritzParams spritz;
    FlicrParams flicr;
    FailureConfig failures;
    uint64_t seed = 1;
    SimTime time_limit = 1'000'000'000'000;
    double watchdog_s = 0;
    std::string output_dir;
};

// Unknown keys and out-of-range values raise ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json &j);
ExperimentConfig load_config(const std::string &path);
// Fully resolved configuration, accepted back by parse_config.
nlohmann::json config_to_json(const ExperimentConfig &cfg);

nlohmann::json topology_to_json(const Topology &topo);

// Topology with the configured failures applied.
Topology build_topology(const ExperimentConfig &cfg);
std::vector<FlowSpec> build_workload(const ExperimentConfig &cfg, const Topology &topo);
SimulationConfig simulation_config(const ExperimentConfig &cfg);

struct ExperimentResult {
    RunResult run;
    nlohmann::json summary;
};

// Runs one experiment; when `export_dir` is non-empty, writes flows.csv and
// summary.json there.
ExperimentResult run_experiment(const ExperimentConfig &cfg, const std::string &export_dir = "");

// Default output location: $SPRITZ_OUTPUT_ROOT (or "results") joined with
// `leaf`.
std::string default_output_dir(const std::string &leaf);
std::string cell_name(Scheme scheme, uint64_t seed);

struct SweepCell {
    Scheme scheme;
    uint64_t seed;
    std::string dir;
    bool ok = false;
    std::string error;
};

// Cross product of schemes and seeds, one directory per cell under `root`.
// Cells run on up to `threads` workers; a failing cell does not stop the
// others.
std::vector<SweepCell> run_sweep(const ExperimentConfig &base, const std::vector<Scheme> &schemes,
                                 const std::vector<uint64_t> &seeds, const std::string &root, unsigned threads);

} // namespace spritz
