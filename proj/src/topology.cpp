// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/topology.hpp"

#include "spritz/errors.hpp"
#include "spritz/galois_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <sstream>

namespace spritz {

const char *to_string(LinkClass c) {
    switch (c) {
    case LinkClass::Local:
        return "local";
    case LinkClass::Global:
        return "global";
    case LinkClass::Endpoint:
        return "endpoint";
    }
    return "?";
}

void Topology::add_switch_link(SwitchId a, SwitchId b, LinkClass cls) {
    Link l;
    l.a = {NodeKind::Switch, std::min(a, b)};
    l.b = {NodeKind::Switch, std::max(a, b)};
    l.cls = cls;
    l.propagation_ns = cls == LinkClass::Local ? latencies_.local_ns : latencies_.global_ns;
    links_.push_back(l);
}

void Topology::finalize() {
    endpoint_link_base_ = static_cast<LinkIndex>(links_.size());
    for (EndpointId e = 0; e < endpoint_count(); ++e) {
        Link l;
        l.a = {NodeKind::Switch, switch_of(e)};
        l.b = {NodeKind::Endpoint, e};
        l.cls = LinkClass::Endpoint;
        l.propagation_ns = latencies_.endpoint_ns;
        links_.push_back(l);
    }

    std::vector<std::vector<Adjacent>> adj(switch_count_);
    for (LinkIndex i = 0; i < endpoint_link_base_; ++i) {
        const Link &l = links_[i];
        adj[l.a.index].push_back({l.b.index, i});
        adj[l.b.index].push_back({l.a.index, i});
    }
    offsets_.assign(switch_count_ + 1, 0);
    adjacency_.clear();
    for (SwitchId s = 0; s < switch_count_; ++s) {
        std::sort(adj[s].begin(), adj[s].end(),
                  [](const Adjacent &x, const Adjacent &y) { return x.peer < y.peer; });
        offsets_[s] = static_cast<uint32_t>(adjacency_.size());
        adjacency_.insert(adjacency_.end(), adj[s].begin(), adj[s].end());
    }
    offsets_[switch_count_] = static_cast<uint32_t>(adjacency_.size());
}

LinkIndex Topology::link_between(SwitchId a, SwitchId b) const {
    auto nb = neighbors(a);
    auto it = std::lower_bound(nb.begin(), nb.end(), b,
                               [](const Adjacent &x, SwitchId v) { return x.peer < v; });
    if (it == nb.end() || it->peer != b)
        return kNoLink;
    return it->link;
}

std::vector<LinkIndex> Topology::switch_links() const {
    std::vector<LinkIndex> out(endpoint_link_base_);
    std::iota(out.begin(), out.end(), 0);
    return out;
}

uint32_t Topology::failed_link_count() const {
    return static_cast<uint32_t>(std::count_if(links_.begin(), links_.end(), [](const Link &l) { return !l.up; }));
}

Topology Topology::pristine() const {
    Topology t = *this;
    for (auto &l : t.links_)
        l.up = true;
    return t;
}

std::string Topology::describe() const {
    std::ostringstream os;
    if (kind_ == TopologyKind::Dragonfly) {
        const auto &d = std::get<DragonflyParams>(params_);
        os << "dragonfly(p=" << d.p << ",a=" << d.a << ",h=" << d.h << ")";
    } else {
        const auto &s = std::get<SlimFlyParams>(params_);
        os << "slimfly(q=" << s.q << ",p=" << s.p << ")";
    }
    return os.str();
}

Topology build_dragonfly(const DragonflyParams &params, const LinkLatencies &lat) {
    if (params.p < 1 || params.a < 1 || params.h < 1)
        throw InvalidParameter("dragonfly parameters p, a, h must all be >= 1");
    Topology t;
    t.kind_ = TopologyKind::Dragonfly;
    t.params_ = params;
    t.latencies_ = lat;
    const uint32_t a = params.a, h = params.h, g = params.groups();
    t.switch_count_ = a * g;
    t.endpoints_per_switch_ = params.p;
    t.group_count_ = g;

    for (uint32_t grp = 0; grp < g; ++grp)
        for (uint32_t i = 0; i < a; ++i)
            for (uint32_t j = i + 1; j < a; ++j)
                t.add_switch_link(grp * a + i, grp * a + j, LinkClass::Local);

    // Switch i of group G owns the links to groups G + i*h + 1 ... G + (i+1)*h.
    for (uint32_t grp = 0; grp < g; ++grp) {
        for (uint32_t i = 0; i < a; ++i) {
            for (uint32_t j = 0; j < h; ++j) {
                const uint32_t offset = i * h + j + 1;
                const uint32_t target = (grp + offset) % g;
                if (target < grp)
                    continue;
                const uint32_t back = g - offset;
                const uint32_t peer = (back - 1) / h;
                t.add_switch_link(grp * a + i, target * a + peer, LinkClass::Global);
            }
        }
    }
    t.finalize();
    return t;
}

namespace {

struct GeneratorSets {
    std::vector<GFElement> x, x_prime;
};

GeneratorSets mms_generators(const GaloisField &f, int delta) {
    const uint32_t q = f.order();
    const GFElement xi = f.primitive_element();
    GeneratorSets g;
    auto powers = [&](uint32_t from, uint32_t to, std::vector<GFElement> &out) {
        for (uint32_t e = from; e <= to; e += 2)
            out.push_back(f.pow(xi, e));
    };
    if (delta == 1) {
        powers(0, q - 3, g.x);
        powers(1, q - 2, g.x_prime);
    } else if (delta == 0) {
        powers(0, q - 2, g.x);
        powers(1, q - 1, g.x_prime);
    } else {
        const uint32_t w = (q + 1) / 4;
        powers(0, 2 * w - 2, g.x);
        powers(2 * w - 1, 4 * w - 3, g.x);
        powers(1, 2 * w - 1, g.x_prime);
        powers(2 * w, 4 * w - 2, g.x_prime);
    }
    return g;
}

bool contains(const std::vector<GFElement> &set, GFElement v) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

} // namespace

Topology build_slimfly(const SlimFlyParams &params, const LinkLatencies &lat) {
    const uint32_t q = params.q;
    auto [prime, power] = prime_power_decomposition(q);
    if (prime == 0)
        throw InvalidParameter("slim fly q=" + std::to_string(q) + " is not a prime power");
    int delta;
    switch (q % 4) {
    case 0:
        delta = 0;
        break;
    case 1:
        delta = 1;
        break;
    case 3:
        delta = -1;
        break;
    default:
        throw InvalidParameter("slim fly q=" + std::to_string(q) + " is not of the form 4w + delta");
    }
    if (params.delta && *params.delta != delta)
        throw InvalidParameter("slim fly q=" + std::to_string(q) + " does not satisfy q = 4w + " +
                               std::to_string(*params.delta));
    if (params.p < 1)
        throw InvalidParameter("slim fly p must be >= 1");

    GaloisField f(q);
    const GeneratorSets gen = mms_generators(f, delta);

    Topology t;
    t.kind_ = TopologyKind::SlimFly;
    SlimFlyParams resolved = params;
    resolved.delta = delta;
    t.params_ = resolved;
    t.latencies_ = lat;
    t.switch_count_ = 2 * q * q;
    t.endpoints_per_switch_ = params.p;
    t.group_count_ = 2 * q;

    auto id0 = [q](uint32_t x, uint32_t y) { return x * q + y; };
    auto id1 = [q](uint32_t m, uint32_t c) { return q * q + m * q + c; };

    for (uint32_t row = 0; row < q; ++row) {
        for (uint32_t y = 0; y < q; ++y) {
            for (uint32_t y2 = y + 1; y2 < q; ++y2) {
                const GFElement d = f.sub({y}, {y2});
                if (contains(gen.x, d))
                    t.add_switch_link(id0(row, y), id0(row, y2), LinkClass::Local);
                if (contains(gen.x_prime, d))
                    t.add_switch_link(id1(row, y), id1(row, y2), LinkClass::Local);
            }
        }
    }
    for (uint32_t x = 0; x < q; ++x)
        for (uint32_t m = 0; m < q; ++m)
            for (uint32_t c = 0; c < q; ++c) {
                const GFElement y = f.add(f.mul({m}, {x}), {c});
                t.add_switch_link(id0(x, y.value), id1(m, c), LinkClass::Global);
            }
    t.finalize();
    return t;
}

std::vector<uint32_t> bfs_distances(const Topology &topo, SwitchId src) {
    std::vector<uint32_t> dist(topo.switch_count(), kUnreachable);
    std::deque<SwitchId> frontier{src};
    dist[src] = 0;
    while (!frontier.empty()) {
        const SwitchId u = frontier.front();
        frontier.pop_front();
        for (const auto &adj : topo.neighbors(u)) {
            if (!topo.link(adj.link).up || dist[adj.peer] != kUnreachable)
                continue;
            dist[adj.peer] = dist[u] + 1;
            frontier.push_back(adj.peer);
        }
    }
    return dist;
}

std::vector<SwitchId> shortest_path(const Topology &topo, SwitchId src, SwitchId dst) {
    if (src >= topo.switch_count() || dst >= topo.switch_count())
        throw InvalidParameter("switch id out of range");
    const auto dist = bfs_distances(topo, dst);
    if (dist[src] == kUnreachable)
        throw Unreachable("switch " + std::to_string(dst) + " unreachable from " + std::to_string(src));
    std::vector<SwitchId> hops;
    SwitchId u = src;
    while (u != dst) {
        for (const auto &adj : topo.neighbors(u)) {
            if (topo.link(adj.link).up && dist[adj.peer] + 1 == dist[u]) {
                u = adj.peer;
                break;
            }
        }
        hops.push_back(u);
    }
    return hops;
}

bool is_connected(const Topology &topo) {
    if (topo.switch_count() == 0)
        return true;
    const auto d = bfs_distances(topo, 0);
    return std::none_of(d.begin(), d.end(), [](uint32_t x) { return x == kUnreachable; });
}

uint32_t diameter(const Topology &topo) {
    uint32_t best = 0;
    for (SwitchId s = 0; s < topo.switch_count(); ++s) {
        for (uint32_t d : bfs_distances(topo, s)) {
            if (d == kUnreachable)
                return kUnreachable;
            best = std::max(best, d);
        }
    }
    return best;
}

Topology fail_links(const Topology &topo, double fraction, uint64_t seed, int max_retries) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw InvalidParameter("failure fraction must lie in [0, 1)");
    std::vector<LinkIndex> candidates = topo.switch_links();
    const auto count = static_cast<size_t>(std::floor(fraction * double(candidates.size()) + 1e-9));
    if (count == 0)
        return topo;

    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        // Partial Fisher-Yates: the first `count` entries are the sample.
        for (size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<size_t> pick(i, candidates.size() - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
        }
        Topology out = topo;
        for (size_t i = 0; i < count; ++i)
            out.set_link_up(candidates[i], false);
        if (is_connected(out))
            return out;
    }
    throw DisconnectedAfterFailure("no connected failure sample found in " + std::to_string(max_retries) +
                                   " attempts");
}

MinimalRoutes::MinimalRoutes(const Topology &topo) : n_(topo.switch_count()) {
    dist_.assign(size_t(n_) * n_, kUnreachable);
    next_.assign(size_t(n_) * n_, kUnreachable);
    for (SwitchId d = 0; d < n_; ++d) {
        const auto dist = bfs_distances(topo, d);
        for (SwitchId u = 0; u < n_; ++u) {
            dist_[size_t(u) * n_ + d] = dist[u];
            if (u == d || dist[u] == kUnreachable)
                continue;
            for (const auto &adj : topo.neighbors(u)) {
                if (topo.link(adj.link).up && dist[adj.peer] + 1 == dist[u]) {
                    next_[size_t(u) * n_ + d] = adj.peer;
                    break;
                }
            }
        }
    }
}

std::vector<SwitchId> MinimalRoutes::path(SwitchId from, SwitchId to) const {
    if (distance(from, to) == kUnreachable)
        throw Unreachable("switch " + std::to_string(to) + " unreachable from " + std::to_string(from));
    std::vector<SwitchId> hops;
    while (from != to) {
        from = next_hop(from, to);
        hops.push_back(from);
    }
    return hops;
}

uint64_t fingerprint(const Topology &topo) {
    uint64_t hash = 1469598103934665603ull;
    auto mix = [&hash](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            hash ^= (v >> (8 * i)) & 0xff;
            hash *= 1099511628211ull;
        }
    };
    mix(static_cast<uint64_t>(topo.kind()));
    mix(topo.switch_count());
    mix(topo.endpoints_per_switch());
    for (const Link &l : topo.links()) {
        mix((uint64_t(l.a.kind) << 32) | l.a.index);
        mix((uint64_t(l.b.kind) << 32) | l.b.index);
        mix(static_cast<uint64_t>(l.cls));
        mix(std::bit_cast<uint64_t>(l.propagation_ns));
        mix(l.up ? 1 : 0);
    }
    return hash;
}

} // namespace spritz
