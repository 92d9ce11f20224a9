// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/workloads.hpp"

#include "spritz/errors.hpp"
#include "spritz/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace spritz {

namespace {

FlowSpec make_flow(EndpointId src, EndpointId dst, uint64_t bytes, FlowTag tag, SimTime start = 0) {
    FlowSpec f;
    f.src = src;
    f.dst = dst;
    f.bytes = bytes;
    f.tag = tag;
    f.start = start;
    return f;
}

// Random bijection over `nodes` with no fixed point and, when `group` is
// given, no pair inside one group.
std::vector<uint32_t> random_matching(const std::vector<uint32_t> &nodes, const std::vector<uint32_t> *group,
                                      Rng &rng) {
    const size_t n = nodes.size();
    if (n < 2)
        throw InfeasibleMatching("a matching needs at least two endpoints");
    if (group) {
        std::vector<size_t> per_group;
        for (uint32_t g : *group) {
            if (g >= per_group.size())
                per_group.resize(g + 1, 0);
            ++per_group[g];
        }
        if (*std::max_element(per_group.begin(), per_group.end()) * 2 > n)
            throw InfeasibleMatching("a group holds more than half of the endpoints");
    }
    // Position lookup keeps the group test O(1).
    std::vector<uint32_t> pos_group;
    if (group) {
        uint32_t max_node = *std::max_element(nodes.begin(), nodes.end());
        pos_group.assign(max_node + 1, 0);
        for (size_t i = 0; i < n; ++i)
            pos_group[nodes[i]] = (*group)[i];
    }
    auto conflict = [&](size_t i, uint32_t target) {
        if (nodes[i] == target)
            return true;
        return group && (*group)[i] == pos_group[target];
    };

    std::vector<uint32_t> perm = nodes;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int round = 0; round < 64; ++round) {
        bool clean = true;
        for (size_t i = 0; i < n; ++i) {
            if (!conflict(i, perm[i]))
                continue;
            clean = false;
            // Swap targets with a random partner that accepts ours.
            bool fixed = false;
            for (int tries = 0; tries < 64 && !fixed; ++tries) {
                const size_t j = uniform_index(rng, n);
                if (j != i && !conflict(i, perm[j]) && !conflict(j, perm[i])) {
                    std::swap(perm[i], perm[j]);
                    fixed = true;
                }
            }
            for (size_t j = 0; j < n && !fixed; ++j) {
                if (j != i && !conflict(i, perm[j]) && !conflict(j, perm[i])) {
                    std::swap(perm[i], perm[j]);
                    fixed = true;
                }
            }
        }
        if (clean)
            return perm;
    }
    throw InfeasibleMatching("could not build a matching under the group constraint");
}

} // namespace

std::vector<FlowSpec> gen_permutation(const Topology &topo, bool cross_group, uint64_t flow_bytes, uint64_t seed) {
    if (flow_bytes == 0)
        throw InvalidParameter("flow size must be positive");
    Rng rng(derive_seed(seed, 0x9e41));
    std::vector<uint32_t> nodes(topo.endpoint_count());
    std::iota(nodes.begin(), nodes.end(), 0);
    std::vector<uint32_t> groups;
    for (uint32_t e : nodes)
        groups.push_back(topo.group_of_endpoint(e));
    const auto perm = random_matching(nodes, cross_group ? &groups : nullptr, rng);
    std::vector<FlowSpec> flows;
    for (size_t i = 0; i < nodes.size(); ++i)
        flows.push_back(make_flow(nodes[i], perm[i], flow_bytes, FlowTag::Foreground));
    return flows;
}

SwitchId dragonfly_gateway(const Topology &topo, uint32_t group, uint32_t target) {
    const uint32_t a = topo.group_size();
    for (SwitchId s = group * a; s < (group + 1) * a; ++s)
        for (const auto &adj : topo.neighbors(s))
            if (topo.group_of(adj.peer) == target)
                return s;
    throw InvalidParameter("no global link from group " + std::to_string(group) + " to " + std::to_string(target));
}

SwitchId slimfly_adversarial_partner(const Topology &topo, SwitchId s) {
    const auto dist = bfs_distances(topo, s);
    std::vector<uint8_t> mine(topo.switch_count(), 0);
    for (const auto &adj : topo.neighbors(s))
        mine[adj.peer] = 1;
    SwitchId best = kUnreachable;
    size_t best_common = SIZE_MAX;
    for (SwitchId d = 0; d < topo.switch_count(); ++d) {
        if (dist[d] != 2)
            continue;
        size_t common = 0;
        for (const auto &adj : topo.neighbors(d))
            common += mine[adj.peer];
        if (common < best_common) {
            best_common = common;
            best = d;
        }
    }
    if (best == kUnreachable)
        throw InvalidParameter("switch has no distance-2 partner");
    return best;
}

std::vector<FlowSpec> gen_adversarial(const Topology &topo, uint64_t flow_bytes, uint64_t seed) {
    if (flow_bytes == 0)
        throw InvalidParameter("flow size must be positive");
    Rng rng(derive_seed(seed, 0xad5e));
    std::vector<FlowSpec> flows;
    const uint32_t p = topo.endpoints_per_switch();
    if (topo.kind() == TopologyKind::Dragonfly) {
        const uint32_t per_group = topo.group_size() * p;
        const uint32_t groups = topo.group_count();
        if (groups < 2)
            throw InvalidParameter("adversarial traffic needs at least two groups");
        for (uint32_t g = 0; g < groups; ++g) {
            const uint32_t next = (g + 1) % groups;
            std::vector<uint32_t> targets(per_group);
            std::iota(targets.begin(), targets.end(), next * per_group);
            std::shuffle(targets.begin(), targets.end(), rng);
            for (uint32_t k = 0; k < per_group; ++k)
                flows.push_back(make_flow(g * per_group + k, targets[k], flow_bytes, FlowTag::Foreground));
        }
        return flows;
    }
    for (SwitchId s = 0; s < topo.switch_count(); ++s) {
        const SwitchId d = slimfly_adversarial_partner(topo, s);
        std::vector<uint32_t> targets(p);
        std::iota(targets.begin(), targets.end(), d * p);
        std::shuffle(targets.begin(), targets.end(), rng);
        for (uint32_t k = 0; k < p; ++k)
            flows.push_back(make_flow(s * p + k, targets[k], flow_bytes, FlowTag::Foreground));
    }
    return flows;
}

std::vector<FlowSpec> gen_motivational(const Topology &topo, const MotivationalParams &params) {
    if (topo.kind() != TopologyKind::Dragonfly)
        throw InvalidParameter("the motivational scenario needs a Dragonfly");
    const uint32_t groups = topo.group_count();
    const uint32_t p = topo.endpoints_per_switch();
    const uint32_t per_group = topo.group_size() * p;
    const EndpointId dst = params.dst.value_or((groups - 1) * per_group);
    const EndpointId src = params.src;
    if (src >= topo.endpoint_count() || dst >= topo.endpoint_count())
        throw InvalidParameter("monitored endpoint out of range");
    const uint32_t dst_group = topo.group_of_endpoint(dst);
    const uint32_t src_group = topo.group_of_endpoint(src);
    if (src_group == dst_group)
        throw InvalidParameter("monitored source and destination share a group");
    if (params.free_groups + 2 > groups)
        throw InvalidParameter("too many free groups for this Dragonfly");

    // Free groups hang off the source switch's own global links, so an
    // uncongested two-global-hop detour exists for the monitored flow.
    std::vector<uint8_t> free(groups, 0);
    free[dst_group] = 1;
    uint32_t left = params.free_groups;
    for (const auto &adj : topo.neighbors(topo.switch_of(src))) {
        const uint32_t g = topo.group_of(adj.peer);
        if (left == 0)
            break;
        if (g != src_group && !free[g]) {
            free[g] = 1;
            --left;
        }
    }
    for (uint32_t k = 1; left > 0; ++k) {
        const uint32_t g = (dst_group + groups - k) % groups;
        if (g != src_group && !free[g]) {
            free[g] = 1;
            --left;
        }
    }

    std::vector<FlowSpec> flows;
    flows.push_back(make_flow(src, dst, params.monitored_bytes, FlowTag::Monitored));
    if (!params.background)
        return flows;
    for (uint32_t g = 0; g < groups; ++g) {
        if (free[g])
            continue;
        const SwitchId gw = dragonfly_gateway(topo, g, dst_group);
        uint32_t k = 0;
        for (EndpointId e = g * per_group; e < (g + 1) * per_group; ++e) {
            if (e == src || topo.switch_of(e) == gw)
                continue;
            const EndpointId target = gw * p + (k++ % p);
            flows.push_back(make_flow(e, target, params.background_bytes, FlowTag::Background));
        }
    }
    return flows;
}

IncastParams scaled_incast(const Topology &topo) {
    IncastParams p;
    const uint32_t n = topo.endpoint_count();
    if (n < 1056) {
        p.senders = std::max<uint32_t>(2, static_cast<uint32_t>(uint64_t(32) * n / 1056));
        p.receiver = static_cast<EndpointId>(uint64_t(160) * n / 1056);
        if (p.receiver < p.senders)
            p.receiver = std::min<EndpointId>(n - 1, p.senders + topo.endpoints_per_switch());
    }
    return p;
}

std::vector<FlowSpec> gen_incast_bystanders(const Topology &topo, const IncastParams &params) {
    const uint32_t n = topo.endpoint_count();
    if (params.senders == 0 || params.senders >= n || params.receiver >= n)
        throw InvalidParameter("incast sender count or receiver out of range");
    if (params.receiver < params.senders)
        throw InvalidParameter("incast receiver must not be a sender");
    if (params.flow_bytes == 0)
        throw InvalidParameter("flow size must be positive");
    std::vector<FlowSpec> flows;
    for (EndpointId e = 0; e < params.senders; ++e)
        flows.push_back(make_flow(e, params.receiver, params.flow_bytes, FlowTag::Incast));
    std::vector<uint32_t> rest;
    for (EndpointId e = params.senders; e < n; ++e)
        if (e != params.receiver)
            rest.push_back(e);
    if (rest.size() >= 2) {
        Rng rng(derive_seed(params.seed, 0x1ca5));
        const auto perm = random_matching(rest, nullptr, rng);
        for (size_t i = 0; i < rest.size(); ++i)
            flows.push_back(make_flow(rest[i], perm[i], params.flow_bytes, FlowTag::Bystander));
    }
    return flows;
}

const char *to_string(CollectiveAlgorithm a) {
    switch (a) {
    case CollectiveAlgorithm::AllreduceRing:
        return "allreduce_ring";
    case CollectiveAlgorithm::AllreduceButterfly:
        return "allreduce_butterfly";
    case CollectiveAlgorithm::Alltoall:
        return "alltoall";
    }
    return "?";
}

std::optional<CollectiveAlgorithm> parse_collective(const std::string &s) {
    for (auto a : {CollectiveAlgorithm::AllreduceRing, CollectiveAlgorithm::AllreduceButterfly,
                   CollectiveAlgorithm::Alltoall})
        if (s == to_string(a))
            return a;
    return std::nullopt;
}

std::vector<FlowSpec> gen_collective(const CollectiveSpec &spec) {
    const auto &ps = spec.participants;
    const uint32_t n = static_cast<uint32_t>(ps.size());
    if (n < 2)
        throw InvalidParticipants("a collective needs at least two participants");
    {
        auto sorted = ps;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidParticipants("collective participants must be distinct");
    }
    if (spec.message_bytes == 0)
        throw InvalidParameter("collective message size must be positive");
    const uint64_t chunk = std::max<uint64_t>(1, spec.message_bytes / n);
    std::vector<FlowSpec> flows;

    switch (spec.algorithm) {
    case CollectiveAlgorithm::AllreduceRing: {
        // Step s: rank k forwards a chunk to k+1 once it has sent step s-1
        // and received rank k-1's step s-1 chunk.
        const uint32_t steps = 2 * (n - 1);
        for (uint32_t s = 0; s < steps; ++s) {
            for (uint32_t k = 0; k < n; ++k) {
                FlowSpec f = make_flow(ps[k], ps[(k + 1) % n], chunk, FlowTag::Foreground);
                if (s > 0) {
                    const uint32_t prev = (s - 1) * n;
                    f.depends_on = {prev + k, prev + (k + n - 1) % n};
                }
                flows.push_back(std::move(f));
            }
        }
        break;
    }
    case CollectiveAlgorithm::AllreduceButterfly: {
        if ((n & (n - 1)) != 0)
            throw InvalidParticipants("butterfly allreduce needs a power-of-two participant count");
        // Recursive doubling: the full buffer is exchanged with rank k ^ 2^r.
        uint32_t rounds = 0;
        while ((1u << rounds) < n)
            ++rounds;
        for (uint32_t r = 0; r < rounds; ++r) {
            for (uint32_t k = 0; k < n; ++k) {
                FlowSpec f = make_flow(ps[k], ps[k ^ (1u << r)], spec.message_bytes, FlowTag::Foreground);
                if (r > 0) {
                    const uint32_t prev = (r - 1) * n;
                    const uint32_t peer = k ^ (1u << (r - 1));
                    f.depends_on = {prev + k, prev + peer};
                }
                flows.push_back(std::move(f));
            }
        }
        break;
    }
    case CollectiveAlgorithm::Alltoall: {
        if (spec.parallel == 0)
            throw InvalidParameter("alltoall needs at least one parallel connection");
        // Rank k sends to k+1, k+2, ...; transfer o waits for transfer o-n.
        for (uint32_t k = 0; k < n; ++k) {
            const uint32_t base = static_cast<uint32_t>(flows.size());
            for (uint32_t o = 1; o < n; ++o) {
                FlowSpec f = make_flow(ps[k], ps[(k + o) % n], chunk, FlowTag::Foreground);
                if (o > spec.parallel)
                    f.depends_on = {base + (o - 1 - spec.parallel)};
                flows.push_back(std::move(f));
            }
        }
        break;
    }
    }
    return flows;
}

std::vector<EndpointId> random_participants(const Topology &topo, uint32_t count, uint64_t seed) {
    const uint32_t n = topo.endpoint_count();
    if (count == 0 || count > n)
        throw InvalidParticipants("participant count out of range");
    std::vector<EndpointId> all(n);
    std::iota(all.begin(), all.end(), 0);
    Rng rng(derive_seed(seed, 0xc011));
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
}

std::vector<FlowSpec> gen_collective_with_background(const Topology &topo, const CollectiveSpec &spec,
                                                     uint64_t background_bytes, uint64_t seed) {
    for (EndpointId e : spec.participants)
        if (e >= topo.endpoint_count())
            throw InvalidParticipants("participant out of range");
    auto flows = gen_collective(spec);
    std::vector<uint8_t> busy(topo.endpoint_count(), 0);
    for (EndpointId e : spec.participants)
        busy[e] = 1;
    std::vector<uint32_t> rest;
    for (EndpointId e = 0; e < topo.endpoint_count(); ++e)
        if (!busy[e])
            rest.push_back(e);
    if (rest.size() >= 2 && background_bytes > 0) {
        Rng rng(derive_seed(seed, 0xb9));
        const auto perm = random_matching(rest, nullptr, rng);
        for (size_t i = 0; i < rest.size(); ++i) {
            FlowSpec f = make_flow(rest[i], perm[i], background_bytes, FlowTag::Background);
            f.scheme = Scheme::Ecmp;
            flows.push_back(std::move(f));
        }
    }
    return flows;
}

void SizeCdf::validate() const {
    if (points.size() < 2)
        throw InvalidParameter("a size CDF needs at least two points");
    for (size_t i = 0; i < points.size(); ++i) {
        const auto &[size, prob] = points[i];
        if (!(size >= 0) || !(prob >= 0 && prob <= 1))
            throw InvalidParameter("size CDF point out of range");
        if (i > 0 && (size < points[i - 1].first || prob < points[i - 1].second))
            throw InvalidParameter("size CDF must be monotone");
    }
    if (std::abs(points.back().second - 1.0) > 1e-9)
        throw InvalidParameter("size CDF must end at probability 1");
}

double SizeCdf::mean() const {
    // Sizes are uniform between consecutive points.
    double m = points.front().first * points.front().second;
    for (size_t i = 1; i < points.size(); ++i)
        m += (points[i].second - points[i - 1].second) * 0.5 * (points[i].first + points[i - 1].first);
    return m;
}

double SizeCdf::sample(double u) const {
    if (u <= points.front().second)
        return points.front().first;
    for (size_t i = 1; i < points.size(); ++i) {
        if (u <= points[i].second) {
            const auto &[x0, p0] = points[i - 1];
            const auto &[x1, p1] = points[i];
            if (p1 == p0)
                return x1;
            return x0 + (u - p0) / (p1 - p0) * (x1 - x0);
        }
    }
    return points.back().first;
}

SizeCdf load_size_cdf(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cdf", "cannot open " + path);
    SizeCdf cdf;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream ls(line);
        double size, prob;
        if (!(ls >> size))
            continue;
        if (!(ls >> prob))
            throw ConfigError("cdf", "malformed line in " + path);
        cdf.points.emplace_back(size, prob);
    }
    cdf.validate();
    return cdf;
}

std::string default_websearch_cdf_path() { return std::string(SPRITZ_DATA_DIR) + "/websearch_cdf.txt"; }

std::vector<FlowSpec> gen_trace(const Topology &topo, const SizeCdf &cdf, const TraceParams &params) {
    cdf.validate();
    if (!(params.load >= 0 && params.load <= 1))
        throw InvalidParameter("trace load must lie in [0, 1]");
    if (params.max_senders_per_receiver == 0)
        throw InvalidParameter("receiver cap must be positive");
    const uint32_t n = topo.endpoint_count();
    std::vector<FlowSpec> flows;
    if (params.load == 0 || n < 2)
        return flows;
    const double bytes_per_ps = params.link_gbps / 8.0 / 1000.0; // Gb/s to B/ps
    const double mean = cdf.mean();
    const double rate = params.load * n * bytes_per_ps / mean; // flows per ps
    Rng rng(derive_seed(params.seed, 0x7ace));
    std::exponential_distribution<double> gap(rate);

    // Busy-until times of the flows each receiver is absorbing.
    std::vector<std::vector<SimTime>> active(n);
    std::vector<uint32_t> candidates;
    double t = 0;
    for (;;) {
        t += gap(rng);
        if (t >= double(params.duration))
            break;
        const SimTime start = static_cast<SimTime>(t);
        const EndpointId src = static_cast<EndpointId>(uniform_index(rng, n));
        const uint64_t bytes = std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(cdf.sample(uniform01(rng)))));
        const SimTime busy_until = start + serialization_time(bytes, params.link_gbps);

        auto load_of = [&](uint32_t r) {
            auto &v = active[r];
            v.erase(std::remove_if(v.begin(), v.end(), [&](SimTime end) { return end <= start; }), v.end());
            return v.size();
        };
        std::optional<uint32_t> dst;
        for (int tries = 0; tries < 32 && !dst; ++tries) {
            const uint32_t r = static_cast<uint32_t>(uniform_index(rng, n));
            if (r != src && load_of(r) < params.max_senders_per_receiver)
                dst = r;
        }
        if (!dst) {
            candidates.clear();
            for (uint32_t r = 0; r < n; ++r)
                if (r != src && load_of(r) < params.max_senders_per_receiver)
                    candidates.push_back(r);
            if (candidates.empty())
                continue;
            dst = candidates[uniform_index(rng, candidates.size())];
        }
        active[*dst].push_back(busy_until);
        flows.push_back(make_flow(src, *dst, bytes, FlowTag::Foreground, start));
    }
    return flows;
}

nlohmann::json schedule_to_json(const std::vector<FlowSpec> &flows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &f : flows) {
        nlohmann::json j{{"src", f.src}, {"dst", f.dst}, {"bytes", f.bytes}, {"start_ps", f.start},
                         {"tag", to_string(f.tag)}};
        if (f.scheme)
            j["scheme"] = to_string(*f.scheme);
        if (!f.depends_on.empty())
            j["depends_on"] = f.depends_on;
        arr.push_back(std::move(j));
    }
    return nlohmann::json{{"flows", arr}};
}

std::vector<FlowSpec> schedule_from_json(const nlohmann::json &j) {
    std::vector<FlowSpec> flows;
    try {
        for (const auto &e : j.at("flows")) {
            FlowSpec f;
            f.src = e.at("src").get<EndpointId>();
            f.dst = e.at("dst").get<EndpointId>();
            f.bytes = e.at("bytes").get<uint64_t>();
            f.start = e.value("start_ps", SimTime(0));
            const auto tag = parse_flow_tag(e.value("tag", std::string("foreground")));
            if (!tag)
                throw ConfigError("flows.tag", "unknown flow tag");
            f.tag = *tag;
            if (e.contains("scheme")) {
                const auto s = parse_scheme(e.at("scheme").get<std::string>());
                if (!s)
                    throw ConfigError("flows.scheme", "unknown scheme");
                f.scheme = *s;
            }
            if (e.contains("depends_on"))
                f.depends_on = e.at("depends_on").get<std::vector<uint32_t>>();
            flows.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception &ex) {
        throw ConfigError("flows", ex.what());
    }
    return flows;
}

} // namespace spritz
