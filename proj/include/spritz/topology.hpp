// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace spritz {

using SwitchId = uint32_t;
using EndpointId = uint32_t;
using LinkIndex = uint32_t;

inline constexpr uint32_t kNoLink = ~0u;
inline constexpr uint32_t kUnreachable = ~0u;

enum class NodeKind : uint8_t { Switch, Endpoint };

struct NodeId {
    NodeKind kind = NodeKind::Switch;
    uint32_t index = 0;
    auto operator<=>(const NodeId &) const = default;
};

enum class LinkClass : uint8_t { Local, Global, Endpoint };

const char *to_string(LinkClass c);

// One record per physical cable; both directions share `up`.
struct Link {
    NodeId a;
    NodeId b;
    LinkClass cls = LinkClass::Local;
    double propagation_ns = 0.0;
    bool up = true;
};

struct LinkLatencies {
    double local_ns = 25.0;
    double global_ns = 500.0;
    double endpoint_ns = 25.0;
};

struct DragonflyParams {
    uint32_t p = 4; // endpoints per switch
    uint32_t a = 8; // switches per group
    uint32_t h = 4; // global links per switch

    uint32_t groups() const { return a * h + 1; }
    uint32_t switches() const { return a * groups(); }
    uint32_t endpoints() const { return p * switches(); }
};

struct SlimFlyParams {
    uint32_t q = 9;
    uint32_t p = 7;
    // Derived from q when unset; if set it must satisfy q = 4w + delta.
    std::optional<int> delta;

    uint32_t switches() const { return 2 * q * q; }
    uint32_t endpoints() const { return p * switches(); }
};

enum class TopologyKind : uint8_t { Dragonfly, SlimFly };

class Topology {
  public:
    struct Adjacent {
        SwitchId peer;
        LinkIndex link;
    };

    TopologyKind kind() const { return kind_; }
    const std::variant<DragonflyParams, SlimFlyParams> &params() const { return params_; }
    const LinkLatencies &latencies() const { return latencies_; }

    uint32_t switch_count() const { return switch_count_; }
    uint32_t endpoint_count() const { return switch_count_ * endpoints_per_switch_; }
    uint32_t endpoints_per_switch() const { return endpoints_per_switch_; }
    uint32_t group_count() const { return group_count_; }
    uint32_t group_size() const { return switch_count_ / group_count_; }

    // Dragonfly group or Slim Fly MMS row.
    uint32_t group_of(SwitchId s) const { return s / group_size(); }
    SwitchId switch_of(EndpointId e) const { return e / endpoints_per_switch_; }
    uint32_t group_of_endpoint(EndpointId e) const { return group_of(switch_of(e)); }

    const std::vector<Link> &links() const { return links_; }
    const Link &link(LinkIndex i) const { return links_[i]; }

    // Switch-to-switch neighbours sorted by peer id (the canonical ECMP order).
    std::span<const Adjacent> neighbors(SwitchId s) const {
        return {adjacency_.data() + offsets_[s], adjacency_.data() + offsets_[s + 1]};
    }
    uint32_t degree(SwitchId s) const { return offsets_[s + 1] - offsets_[s]; }

    // Link index joining two switches, or kNoLink.
    LinkIndex link_between(SwitchId a, SwitchId b) const;
    LinkIndex endpoint_link(EndpointId e) const { return endpoint_link_base_ + e; }

    std::vector<LinkIndex> switch_links() const;
    uint32_t failed_link_count() const;

    // Copy with every link marked up.
    Topology pristine() const;
    void set_link_up(LinkIndex i, bool up) { links_[i].up = up; }

    std::string describe() const;

  private:
    friend Topology build_dragonfly(const DragonflyParams &, const LinkLatencies &);
    friend Topology build_slimfly(const SlimFlyParams &, const LinkLatencies &);

    void add_switch_link(SwitchId a, SwitchId b, LinkClass cls);
    void finalize();

    TopologyKind kind_ = TopologyKind::Dragonfly;
    std::variant<DragonflyParams, SlimFlyParams> params_;
    LinkLatencies latencies_;
    uint32_t switch_count_ = 0;
    uint32_t endpoints_per_switch_ = 0;
    uint32_t group_count_ = 1;
    std::vector<Link> links_;
    std::vector<Adjacent> adjacency_;
    std::vector<uint32_t> offsets_;
    LinkIndex endpoint_link_base_ = 0;
};

Topology build_dragonfly(const DragonflyParams &params, const LinkLatencies &lat = {});

// MMS construction. Throws InvalidParameter if q is not a prime power with
// q mod 4 in {0, 1, 3}, or if an explicit delta disagrees with q.
Topology build_slimfly(const SlimFlyParams &params, const LinkLatencies &lat = {});

// Fails floor(fraction * switch links) distinct switch-to-switch links,
// resampling until the switch graph stays connected.
Topology fail_links(const Topology &topo, double fraction, uint64_t seed, int max_retries = 1000);

// Hop distances over up links from `src` to every switch (kUnreachable if none).
std::vector<uint32_t> bfs_distances(const Topology &topo, SwitchId src);

// Switches visited after `src` on the minimal route (empty when src == dst).
// Ties go to the lowest-id neighbour. Throws Unreachable.
std::vector<SwitchId> shortest_path(const Topology &topo, SwitchId src, SwitchId dst);

bool is_connected(const Topology &topo);
uint32_t diameter(const Topology &topo);

// All-pairs minimal next hops; the default forwarding table of every switch.
class MinimalRoutes {
  public:
    explicit MinimalRoutes(const Topology &topo);

    uint32_t distance(SwitchId from, SwitchId to) const { return dist_[size_t(from) * n_ + to]; }
    // kNoLink-style sentinel (kUnreachable) when from == to or unreachable.
    SwitchId next_hop(SwitchId from, SwitchId to) const { return next_[size_t(from) * n_ + to]; }
    std::vector<SwitchId> path(SwitchId from, SwitchId to) const;

  private:
    uint32_t n_;
    std::vector<uint32_t> dist_;
    std::vector<SwitchId> next_;
};

uint64_t fingerprint(const Topology &topo);

} // namespace spritz
