// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/flow.hpp"
#include "spritz/topology.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spritz {

inline constexpr uint64_t kMiB = 1ull << 20;

// Random perfect matching: every endpoint sends to exactly one other and
// receives from exactly one. With cross_group, no pair shares a group.
std::vector<FlowSpec> gen_permutation(const Topology &topo, bool cross_group, uint64_t flow_bytes, uint64_t seed);

// Dragonfly: group g sends to group g+1 through a seeded bijection between
// the two groups' endpoints. Slim Fly: the endpoints of every switch s send
// to those of partner(s), the distance-2 switch sharing the fewest
// neighbours with s (lowest id on ties).
std::vector<FlowSpec> gen_adversarial(const Topology &topo, uint64_t flow_bytes, uint64_t seed);
SwitchId slimfly_adversarial_partner(const Topology &topo, SwitchId s);

// Lowest-id switch of `group` with a global link into `target`.
SwitchId dragonfly_gateway(const Topology &topo, uint32_t group, uint32_t target);

struct MotivationalParams {
    uint32_t free_groups = 2;
    uint64_t monitored_bytes = 4 * kMiB;
    uint64_t background_bytes = 4 * kMiB;
    bool background = true;
    EndpointId src = 0;
    // Default: first endpoint of the last group.
    std::optional<EndpointId> dst;
};

// One monitored flow plus background flows in every congested group, all
// aimed at the endpoints of the group's gateway to the destination group.
// The destination group and `free_groups` others carry no background
// traffic; free groups are taken from the source switch's global
// neighbours first.
std::vector<FlowSpec> gen_motivational(const Topology &topo, const MotivationalParams &params = {});

struct IncastParams {
    uint32_t senders = 32;
    EndpointId receiver = 160;
    uint64_t flow_bytes = 4 * kMiB;
    uint64_t seed = 1;
};

// Scaled on smaller networks: sender count and receiver id shrink by
// endpoints / 1056.
IncastParams scaled_incast(const Topology &topo);
std::vector<FlowSpec> gen_incast_bystanders(const Topology &topo, const IncastParams &params);

enum class CollectiveAlgorithm : uint8_t { AllreduceRing, AllreduceButterfly, Alltoall };

const char *to_string(CollectiveAlgorithm a);
std::optional<CollectiveAlgorithm> parse_collective(const std::string &s);

struct CollectiveSpec {
    CollectiveAlgorithm algorithm = CollectiveAlgorithm::AllreduceRing;
    std::vector<EndpointId> participants;
    uint64_t message_bytes = 4 * kMiB;
    uint32_t parallel = 8; // alltoall connection cap per endpoint
};

// Dependency-ordered schedule; depends_on indexes into the returned list.
std::vector<FlowSpec> gen_collective(const CollectiveSpec &spec);

// Seeded random choice of `count` distinct endpoints, in ascending order.
std::vector<EndpointId> random_participants(const Topology &topo, uint32_t count, uint64_t seed);

// Collective among `spec.participants` plus an ECMP permutation over every
// other endpoint, tagged background.
std::vector<FlowSpec> gen_collective_with_background(const Topology &topo, const CollectiveSpec &spec,
                                                     uint64_t background_bytes, uint64_t seed);

// Flow-size distribution as (bytes, cumulative probability) points.
struct SizeCdf {
    std::vector<std::pair<double, double>> points;

    void validate() const;
    double mean() const;
    double sample(double u) const; // inverse CDF with linear interpolation
};

// Whitespace separated "bytes probability" lines; '#' starts a comment.
SizeCdf load_size_cdf(const std::string &path);
std::string default_websearch_cdf_path();

struct TraceParams {
    double load = 1.0;
    SimTime duration = 1'000'000'000; // 1 ms
    uint32_t max_senders_per_receiver = 4;
    double link_gbps = 400.0;
    uint64_t seed = 1;
};

// Poisson arrivals at load * aggregate edge bandwidth. Receivers are drawn
// uniformly among those with fewer than the cap of overlapping flows, where
// a flow occupies its receiver for its line-rate transfer time.
std::vector<FlowSpec> gen_trace(const Topology &topo, const SizeCdf &cdf, const TraceParams &params);

nlohmann::json schedule_to_json(const std::vector<FlowSpec> &flows);
std::vector<FlowSpec> schedule_from_json(const nlohmann::json &j);

} // namespace spritz
