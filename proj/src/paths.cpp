// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/paths.hpp"

#include "spritz/errors.hpp"
#include "spritz/galois_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace spritz {

const char *to_string(PathCategory c) {
    switch (c) {
    case PathCategory::MinimalWithinGroup:
        return "minimal_within_group";
    case PathCategory::MinimalAcrossGroups:
        return "minimal_across_groups";
    case PathCategory::NonMinimal:
        return "non_minimal";
    }
    return "?";
}

namespace {

using PC = PathCategory;

constexpr PathType kDragonflyRows[] = {
    {1, 0, PC::MinimalWithinGroup}, {2, 0, PC::MinimalWithinGroup}, {0, 1, PC::MinimalAcrossGroups},
    {1, 1, PC::MinimalAcrossGroups}, {2, 1, PC::MinimalAcrossGroups}, {0, 2, PC::NonMinimal},
    {1, 2, PC::NonMinimal}, {2, 2, PC::NonMinimal}, {3, 2, PC::NonMinimal},
};

constexpr PathType kSlimFlyRows[] = {
    {1, 0, PC::MinimalWithinGroup}, {2, 0, PC::MinimalWithinGroup}, {0, 1, PC::MinimalAcrossGroups},
    {1, 1, PC::MinimalAcrossGroups}, {0, 2, PC::MinimalAcrossGroups}, {3, 0, PC::NonMinimal},
    {4, 0, PC::NonMinimal}, {2, 1, PC::NonMinimal}, {3, 1, PC::NonMinimal},
    {1, 2, PC::NonMinimal}, {2, 2, PC::NonMinimal}, {0, 3, PC::NonMinimal},
    {1, 3, PC::NonMinimal}, {0, 4, PC::NonMinimal},
};

bool is_simple(const SwitchPath &p) {
    SwitchPath sorted = p;
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

// Appends the minimal remainder from the last switch of `p` to dst; false if
// a hop is unavailable.
bool extend_minimal(const MinimalRoutes &routes, SwitchPath &p, SwitchId dst) {
    SwitchId u = p.back();
    while (u != dst) {
        u = routes.next_hop(u, dst);
        if (u == kUnreachable)
            return false;
        p.push_back(u);
    }
    return true;
}

std::optional<PathType> type_of(const Topology &topo, const SwitchPath &p) {
    uint32_t local = 0, global = 0;
    for (size_t i = 0; i + 1 < p.size(); ++i) {
        const LinkIndex l = topo.link_between(p[i], p[i + 1]);
        if (l == kNoLink || !topo.link(l).up)
            return std::nullopt;
        (topo.link(l).cls == LinkClass::Local ? local : global)++;
    }
    return classify_path(topo.kind(), local, global);
}

uint8_t checked_ev(size_t index) {
    if (index > std::numeric_limits<uint8_t>::max())
        throw InvalidParameter("neighbour table larger than 256 entries cannot be addressed by an 8-bit EV");
    return static_cast<uint8_t>(index);
}

} // namespace

std::span<const PathType> path_type_rows(TopologyKind kind) {
    if (kind == TopologyKind::Dragonfly)
        return kDragonflyRows;
    return kSlimFlyRows;
}

std::optional<PathType> classify_path(TopologyKind kind, uint32_t local_hops, uint32_t global_hops) {
    for (const PathType &row : path_type_rows(kind))
        if (row.local_hops == local_hops && row.global_hops == global_hops)
            return row;
    return std::nullopt;
}

std::vector<BoundedPath> enumerate_bounded_paths(const Topology &topo, const MinimalRoutes &routes, SwitchId src,
                                                 SwitchId dst) {
    std::vector<BoundedPath> out;
    if (src == dst)
        return out;
    if (routes.distance(src, dst) == kUnreachable)
        throw Unreachable("switch " + std::to_string(dst) + " unreachable from " + std::to_string(src));

    std::set<SwitchPath> seen;
    auto consider = [&](SwitchPath p, uint8_t ev1, uint8_t ev2) {
        if (!is_simple(p))
            return;
        auto type = type_of(topo, p);
        if (!type || !seen.insert(p).second)
            return;
        out.push_back({std::move(p), *type, {ev1, ev2, 0}});
    };

    const auto first = topo.neighbors(src);
    if (topo.kind() == TopologyKind::Dragonfly && topo.group_of(src) == topo.group_of(dst)) {
        uint8_t index = 0;
        for (const auto &adj : first) {
            if (topo.group_of(adj.peer) != topo.group_of(src))
                continue;
            const uint8_t ev1 = index++;
            if (!topo.link(adj.link).up)
                continue;
            SwitchPath p{src, adj.peer};
            if (extend_minimal(routes, p, dst))
                consider(std::move(p), ev1, 0);
        }
        return out;
    }

    for (size_t i = 0; i < first.size(); ++i) {
        const SwitchId n1 = first[i].peer;
        const uint8_t ev1 = checked_ev(i);
        if (!topo.link(first[i].link).up)
            continue;
        if (n1 == dst) {
            consider({src, dst}, ev1, 0);
            continue;
        }
        const auto second = topo.neighbors(n1);
        for (size_t j = 0; j < second.size(); ++j) {
            const SwitchId n2 = second[j].peer;
            if (n2 == src || !topo.link(second[j].link).up)
                continue;
            SwitchPath p{src, n1, n2};
            if (extend_minimal(routes, p, dst))
                consider(std::move(p), ev1, checked_ev(j));
        }
    }
    return out;
}

std::vector<BoundedPath> enumerate_bounded_paths(const Topology &topo, SwitchId src, SwitchId dst) {
    const MinimalRoutes routes(topo);
    return enumerate_bounded_paths(topo, routes, src, dst);
}

std::pair<uint8_t, uint8_t> ev_assignment(const Topology &topo, std::span<const SwitchId> path) {
    if (path.size() < 2)
        return {0, 0};
    const SwitchId src = path[0];
    const SwitchId dst = path.back();
    const auto first = topo.neighbors(src);
    auto position = [](std::span<const Topology::Adjacent> table, SwitchId peer) {
        for (size_t i = 0; i < table.size(); ++i)
            if (table[i].peer == peer)
                return i;
        throw InvalidParameter("hop " + std::to_string(peer) + " is not adjacent");
    };

    if (topo.kind() == TopologyKind::Dragonfly && topo.group_of(src) == topo.group_of(dst)) {
        uint8_t index = 0;
        for (const auto &adj : first) {
            if (topo.group_of(adj.peer) != topo.group_of(src))
                continue;
            if (adj.peer == path[1])
                return {index, 0};
            ++index;
        }
        throw InvalidParameter("first hop leaves the source group");
    }

    const uint8_t ev1 = checked_ev(position(first, path[1]));
    if (path.size() < 3)
        return {ev1, 0};
    return {ev1, checked_ev(position(topo.neighbors(path[1]), path[2]))};
}

double path_latency(const Topology &topo, std::span<const SwitchId> path, const WireParams &wire) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        const LinkIndex l = topo.link_between(path[i], path[i + 1]);
        if (l == kNoLink)
            throw InvalidParameter("switches " + std::to_string(path[i]) + " and " + std::to_string(path[i + 1]) +
                                   " are not adjacent");
        total += topo.link(l).propagation_ns + wire.serialization_ns();
    }
    return total;
}

double path_latency(const LinkLatencies &lat, uint32_t local_hops, uint32_t global_hops, const WireParams &wire) {
    return local_hops * (lat.local_ns + wire.serialization_ns()) +
           global_hops * (lat.global_ns + wire.serialization_ns());
}

std::vector<double> init_weights(std::span<const double> latencies_ns, double w_scale) {
    if (latencies_ns.empty())
        throw InvalidParameter("weights need at least one path latency");
    const double longest = *std::max_element(latencies_ns.begin(), latencies_ns.end());
    std::vector<double> w;
    w.reserve(latencies_ns.size());
    for (double lat : latencies_ns) {
        if (!(lat > 0.0))
            throw InvalidParameter("path latencies must be positive");
        double wi = longest / lat;
        if (lat < longest)
            wi *= w_scale;
        w.push_back(wi);
    }
    return w;
}

std::optional<uint32_t> EVList::index_of(uint16_t ev) const {
    for (uint32_t i = 0; i < entries.size(); ++i)
        if (entries[i].ev() == ev)
            return i;
    return std::nullopt;
}

EVList make_ev_list(const Topology &topo, std::vector<BoundedPath> paths, const WireParams &wire) {
    std::vector<double> lat(paths.size());
    for (size_t i = 0; i < paths.size(); ++i)
        lat[i] = path_latency(topo, paths[i].switches, wire);
    std::vector<size_t> order(paths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        if (lat[x] != lat[y])
            return lat[x] < lat[y];
        return paths[x].ev.ev() < paths[y].ev.ev();
    });
    EVList list;
    for (size_t i : order) {
        list.entries.push_back(paths[i].ev);
        list.latencies_ns.push_back(lat[i]);
        list.types.push_back(paths[i].type);
        list.paths.push_back(std::move(paths[i].switches));
    }
    return list;
}

size_t EndpointTable::total_entries() const {
    size_t n = 0;
    for (const auto &l : lists_)
        n += l.size();
    return n;
}

size_t EndpointTable::max_entries_per_destination() const {
    size_t n = 0;
    for (const auto &l : lists_)
        n = std::max(n, l.size());
    return n;
}

EndpointTable build_endpoint_table(const Topology &topo, EndpointId src, const WireParams &wire) {
    const MinimalRoutes routes(topo);
    const SwitchId s = topo.switch_of(src);
    std::vector<EVList> lists;
    lists.reserve(topo.switch_count());
    for (SwitchId d = 0; d < topo.switch_count(); ++d)
        lists.push_back(make_ev_list(topo, enumerate_bounded_paths(topo, routes, s, d), wire));
    return EndpointTable(s, std::move(lists));
}

const EVList &PathCatalog::lookup(SwitchId src, SwitchId dst) {
    const uint64_t key = (uint64_t(src) << 32) | dst;
    auto it = cache_.find(key);
    if (it != cache_.end())
        return *it->second;
    auto list = std::make_unique<EVList>(make_ev_list(topo_, enumerate_bounded_paths(topo_, routes_, src, dst), wire_));
    return *cache_.emplace(key, std::move(list)).first->second;
}

uint64_t endpoint_table_bytes(uint32_t destination_switches, uint32_t paths_per_destination) {
    return uint64_t(sizeof(EVEntry)) * paths_per_destination * destination_switches;
}

MemoryEstimate memory_footprint(TopologyKind family, uint64_t endpoints, uint32_t paths_per_destination) {
    MemoryEstimate best{family, "", 0, 0, paths_per_destination, 0};
    uint64_t best_gap = std::numeric_limits<uint64_t>::max();
    auto offer = [&](uint64_t e, uint32_t switches, std::string cfg) {
        const uint64_t gap = e > endpoints ? e - endpoints : endpoints - e;
        if (gap < best_gap) {
            best_gap = gap;
            best.endpoints = e;
            best.switches = switches;
            best.configuration = std::move(cfg);
        }
    };
    if (family == TopologyKind::Dragonfly) {
        for (uint32_t p = 1; p <= 64; ++p) {
            const DragonflyParams d{p, 2 * p, p};
            offer(d.endpoints(), d.switches(),
                  "dragonfly(p=" + std::to_string(p) + ",a=" + std::to_string(2 * p) + ",h=" + std::to_string(p) + ")");
        }
    } else {
        for (uint32_t q = 2; q <= 256; ++q) {
            if (prime_power_decomposition(q).first == 0 || q % 4 == 2)
                continue;
            const int delta = q % 4 == 0 ? 0 : (q % 4 == 1 ? 1 : -1);
            const uint32_t degree = static_cast<uint32_t>((3 * int(q) - delta) / 2);
            const uint32_t p = (degree + 1) / 2;
            const SlimFlyParams s{q, p, delta};
            offer(s.endpoints(), s.switches(),
                  "slimfly(q=" + std::to_string(q) + ",p=" + std::to_string(p) + ")");
        }
    }
    best.bytes = endpoint_table_bytes(best.switches - 1, paths_per_destination);
    return best;
}

} // namespace spritz
