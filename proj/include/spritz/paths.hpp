// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/topology.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace spritz {

enum class PathCategory : uint8_t { MinimalWithinGroup, MinimalAcrossGroups, NonMinimal };

const char *to_string(PathCategory c);

struct PathType {
    uint8_t local_hops = 0;
    uint8_t global_hops = 0;
    PathCategory category = PathCategory::MinimalWithinGroup;

    bool minimal_category() const { return category != PathCategory::NonMinimal; }
    bool operator==(const PathType &) const = default;
};

// Admissible (local, global) hop combinations per topology family. A path
// is bounded iff its hop mix is one of these rows.
std::span<const PathType> path_type_rows(TopologyKind kind);
std::optional<PathType> classify_path(TopologyKind kind, uint32_t local_hops, uint32_t global_hops);

// 24-bit source-side path handle: EV1 steers the first hop, EV2 the second.
struct EVEntry {
    static constexpr uint8_t kTemporarilyUnavailable = 0x1;
    static constexpr uint8_t kPermanentlyUnavailable = 0x2;

    uint8_t ev1 = 0;
    uint8_t ev2 = 0;
    uint8_t meta = 0;

    uint16_t ev() const { return static_cast<uint16_t>((ev1 << 8) | ev2); }
    static EVEntry from_ev(uint16_t ev) { return {static_cast<uint8_t>(ev >> 8), static_cast<uint8_t>(ev & 0xff), 0}; }
    bool same_ev(const EVEntry &o) const { return ev1 == o.ev1 && ev2 == o.ev2; }
};
static_assert(sizeof(EVEntry) == 3);

// Switch sequence including both the source and the destination switch.
using SwitchPath = std::vector<SwitchId>;

struct BoundedPath {
    SwitchPath switches;
    PathType type;
    EVEntry ev;
};

// Every bounded simple path of the form [free first hop] + [free second hop]
// + [minimal remainder]. Dragonfly pairs in one group only steer the first
// hop, inside the group. Results are ordered by (ev1, ev2); paths that
// realise the same switch sequence are reported once, with the smallest EV.
std::vector<BoundedPath> enumerate_bounded_paths(const Topology &topo, const MinimalRoutes &routes, SwitchId src,
                                                 SwitchId dst);
std::vector<BoundedPath> enumerate_bounded_paths(const Topology &topo, SwitchId src, SwitchId dst);

// Indices of hops 1 and 2 in the canonical (sorted) neighbour tables of the
// ECMP 1 and ECMP 2 switches.
std::pair<uint8_t, uint8_t> ev_assignment(const Topology &topo, std::span<const SwitchId> path);

struct WireParams {
    uint32_t packet_bytes = 4160;
    double link_gbps = 400.0;

    double serialization_ns() const { return packet_bytes * 8.0 / link_gbps; }
};

// Propagation plus serialization over the switch-to-switch links of a path.
double path_latency(const Topology &topo, std::span<const SwitchId> path, const WireParams &wire = {});
double path_latency(const LinkLatencies &lat, uint32_t local_hops, uint32_t global_hops, const WireParams &wire = {});

// w_i = lat_longest / lat_i, and every strictly shorter path is scaled by w_scale.
std::vector<double> init_weights(std::span<const double> latencies_ns, double w_scale);

// Latency-sorted paths towards one destination switch.
struct EVList {
    std::vector<EVEntry> entries;
    std::vector<double> latencies_ns;
    std::vector<PathType> types;
    std::vector<SwitchPath> paths;

    size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
    // Position of an EV in this list, if present.
    std::optional<uint32_t> index_of(uint16_t ev) const;
};

EVList make_ev_list(const Topology &topo, std::vector<BoundedPath> paths, const WireParams &wire = {});

class EndpointTable {
  public:
    EndpointTable(SwitchId source_switch, std::vector<EVList> lists)
        : source_switch_(source_switch), lists_(std::move(lists)) {}

    SwitchId source_switch() const { return source_switch_; }
    const EVList &lookup(SwitchId dst_switch) const { return lists_.at(dst_switch); }
    size_t destination_count() const { return lists_.size(); }
    size_t total_entries() const;
    size_t max_entries_per_destination() const;
    size_t memory_bytes() const { return total_entries() * sizeof(EVEntry); }

  private:
    SwitchId source_switch_;
    std::vector<EVList> lists_;
};

EndpointTable build_endpoint_table(const Topology &topo, EndpointId src, const WireParams &wire = {});

// Lazily built EV lists per (source switch, destination switch).
class PathCatalog {
  public:
    PathCatalog(const Topology &topo, const MinimalRoutes &routes, WireParams wire = {})
        : topo_(topo), routes_(routes), wire_(wire) {}

    const EVList &lookup(SwitchId src, SwitchId dst);
    const Topology &topology() const { return topo_; }
    const MinimalRoutes &routes() const { return routes_; }

  private:
    const Topology &topo_;
    const MinimalRoutes &routes_;
    WireParams wire_;
    std::unordered_map<uint64_t, std::unique_ptr<EVList>> cache_;
};

struct MemoryEstimate {
    TopologyKind family;
    std::string configuration;
    uint64_t endpoints = 0;
    uint32_t switches = 0;
    uint32_t paths_per_destination = 0;
    uint64_t bytes = 0;
};

// Upper bound on endpoint-table size: 3 B per entry, `paths_per_destination`
// entries for every other switch. The family configuration is the balanced
// one (Dragonfly a = 2p = 2h, Slim Fly p = ceil(k'/2)) closest to `endpoints`.
MemoryEstimate memory_footprint(TopologyKind family, uint64_t endpoints, uint32_t paths_per_destination);
uint64_t endpoint_table_bytes(uint32_t destination_switches, uint32_t paths_per_destination);

} // namespace spritz
