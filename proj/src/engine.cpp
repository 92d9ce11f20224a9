// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/engine.hpp"

#include "spritz/errors.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <set>

namespace spritz {

namespace {

enum EventType : uint8_t { kArrive, kPortDone, kFlowStart, kRto };

enum PacketKind : uint8_t { kData, kAck, kNack };

enum RouteMode : uint8_t { kModeEv, kModeMinimal, kModeValiant, kModeUgal };

enum PsnStatus : uint8_t { kUnsent, kInFlight, kPendingRetx, kAcked };

constexpr uint16_t kNoIndex = 0xffff;
constexpr size_t kMaxRoute = 8;

} // namespace

uint32_t default_queue_packets(TopologyKind kind) { return kind == TopologyKind::Dragonfly ? 88 : 92; }

double ecn_mark_probability(uint32_t occupancy, uint32_t capacity, double kmin, double kmax) {
    const double lo = kmin * capacity, hi = kmax * capacity;
    const double occ = occupancy;
    if (occ <= lo)
        return 0.0;
    if (occ >= hi)
        return 1.0;
    return (occ - lo) / (hi - lo);
}

SwitchRole role_for_stage(uint8_t stage) {
    if (stage == 0)
        return SwitchRole::Ecmp1;
    if (stage == 1)
        return SwitchRole::Ecmp2;
    return SwitchRole::Default;
}

Forwarding::Forwarding(const Topology &pristine)
    : topo_(pristine), routes_(pristine), n_(pristine.switch_count()),
      next_index_(size_t(n_) * n_, kNoIndex), intra_group_(n_) {
    for (SwitchId at = 0; at < n_; ++at) {
        for (SwitchId d = 0; d < n_; ++d) {
            const SwitchId hop = routes_.next_hop(at, d);
            if (hop != kUnreachable)
                next_index_[size_t(at) * n_ + d] = static_cast<uint16_t>(neighbor_index(at, hop));
        }
        const auto nb = topo_.neighbors(at);
        for (size_t k = 0; k < nb.size(); ++k)
            if (topo_.group_of(nb[k].peer) == topo_.group_of(at))
                intra_group_[at].push_back(static_cast<uint16_t>(k));
    }
}

bool Forwarding::same_group_pair(SwitchId src, SwitchId dst) const {
    return topo_.kind() == TopologyKind::Dragonfly && topo_.group_of(src) == topo_.group_of(dst);
}

uint32_t Forwarding::neighbor_index(SwitchId at, SwitchId peer) const {
    const auto nb = topo_.neighbors(at);
    auto it = std::lower_bound(nb.begin(), nb.end(), peer,
                               [](const Topology::Adjacent &x, SwitchId v) { return x.peer < v; });
    if (it == nb.end() || it->peer != peer)
        throw InvalidParameter("switch " + std::to_string(peer) + " is not a neighbour of " + std::to_string(at));
    return static_cast<uint32_t>(it - nb.begin());
}

uint32_t Forwarding::ev_step(SwitchId at, SwitchId src, SwitchId dst, uint16_t ev, uint8_t &stage) const {
    const uint32_t ev1 = ev >> 8, ev2 = ev & 0xff;
    if (stage == 0) {
        if (same_group_pair(src, dst)) {
            // Inside one group ECMP 1 only sees the intra-group ports and
            // the next switch falls back to the default table.
            stage = 2;
            const auto &table = intra_group_[at];
            if (!table.empty())
                return table[ev1 % table.size()];
            return default_index(at, dst);
        }
        stage = 1;
        return ev1 % topo_.degree(at);
    }
    if (stage == 1) {
        stage = 2;
        return ev2 % topo_.degree(at);
    }
    return default_index(at, dst);
}

SwitchPath Forwarding::trace(SwitchId src, SwitchId dst, uint16_t ev) const {
    SwitchPath path{src};
    uint8_t stage = 0;
    SwitchId at = src;
    while (at != dst) {
        if (path.size() > 2 * kMaxRoute)
            throw Error("EV trace did not converge");
        at = topo_.neighbors(at)[ev_step(at, src, dst, ev, stage)].peer;
        path.push_back(at);
    }
    return path;
}

ValiantChoices::ValiantChoices(const EVList &paths) {
    std::set<SwitchId> firsts;
    for (const auto &p : paths.paths)
        firsts.insert(p[1]);
    first_.assign(firsts.begin(), firsts.end());
    second_.resize(first_.size());
    for (size_t k = 0; k < first_.size(); ++k) {
        std::set<SwitchId> seconds;
        for (const auto &p : paths.paths)
            if (p[1] == first_[k] && p.size() > 2)
                seconds.insert(p[2]);
        second_[k].assign(seconds.begin(), seconds.end());
    }
}

const std::vector<SwitchId> &ValiantChoices::second_hops(SwitchId first) const {
    static const std::vector<SwitchId> none;
    auto it = std::lower_bound(first_.begin(), first_.end(), first);
    if (it == first_.end() || *it != first)
        return none;
    return second_[it - first_.begin()];
}

SwitchId ValiantChoices::sample_first(Rng &rng) const { return first_[uniform_index(rng, first_.size())]; }

std::optional<SwitchId> ValiantChoices::sample_second(SwitchId first, Rng &rng) const {
    const auto &s = second_hops(first);
    if (s.empty())
        return std::nullopt;
    return s[uniform_index(rng, s.size())];
}

struct Simulation::Packet {
    uint32_t flow = 0;
    uint32_t psn = 0;
    uint32_t tx = 0;
    EndpointId src = 0;
    EndpointId dst = 0;
    uint16_t ev = 0;
    uint16_t path = 0;
    uint16_t bytes = 0;
    uint8_t kind = kData;
    uint8_t mode = kModeEv;
    uint8_t stage = 0;
    uint8_t len = 0;
    uint8_t pos = 0;
    bool ecn = false;
    bool trimmed = false;
    std::array<SwitchId, kMaxRoute> route{};
};

struct Simulation::Port {
    uint32_t node = 0;     // switch id, or switch count + endpoint id
    SimTime latency = 0;   // propagation plus the next switch's traversal latency
    LinkIndex link = kNoLink;
    bool nic = false;
    bool busy = false;
    std::deque<uint32_t> data;
    std::deque<uint32_t> ctrl;
};

struct Simulation::Host {
    std::vector<uint32_t> flows;
    size_t rr = 0;
};

struct Simulation::Flow {
    struct Psn {
        uint8_t status = kUnsent;
        uint8_t timeouts = 0;
        uint16_t path = 0;
        uint32_t tx = 0;
    };

    FlowSpec spec;
    Scheme scheme = Scheme::SprayW;
    SwitchId src_sw = 0, dst_sw = 0;
    uint32_t packets = 0;
    const EVList *paths = nullptr;
    std::unique_ptr<LoadBalancer> lb;
    std::optional<CongestionControl> cc;
    ReceiverState rx;
    std::vector<Psn> psn;
    uint32_t next_new = 0;
    std::deque<uint32_t> retx;
    uint64_t inflight = 0;
    uint32_t acked = 0;
    bool started = false;
    bool done = false;
    uint32_t pending_deps = 0;
    std::vector<uint32_t> dependents;
    FlowRecord rec;
    uint64_t live = 0;
};

Simulation::Simulation(const Topology &topo, SimulationConfig cfg)
    : topo_(topo), pristine_(topo.pristine()), cfg_(std::move(cfg)), fwd_(pristine_),
      catalog_(pristine_, fwd_.routes(), WireParams{cfg_.transport.mss(), cfg_.network.link_gbps}),
      rng_(derive_seed(cfg_.seed, 0xec0)) {
    const NetworkParams &net = cfg_.network;
    if (!(net.link_gbps > 0) || !(net.ecn_kmin >= 0 && net.ecn_kmin < net.ecn_kmax && net.ecn_kmax <= 1))
        throw InvalidParameter("invalid network parameters");
    queue_capacity_ = net.queue_packets ? net.queue_packets : default_queue_packets(topo.kind());
    const uint32_t mss = cfg_.transport.mss();
    if (mss > 0xffff)
        throw InvalidParameter("packet size above 64 KiB");
    const uint32_t bdp = cfg_.transport.bdp_packets ? cfg_.transport.bdp_packets : queue_capacity_;
    cwnd_max_ = std::max<uint64_t>(mss, uint64_t(cfg_.transport.cwnd_bdp_multiplier * bdp) * mss);

    // Longest bounded path, plus every switch on it and both endpoint links.
    const WireParams wire{mss, net.link_gbps};
    const auto &lat = topo.latencies();
    double longest = 0;
    uint32_t longest_hops = 0;
    for (const auto &row : path_type_rows(topo.kind())) {
        const double l = path_latency(lat, row.local_hops, row.global_hops, wire);
        if (l > longest) {
            longest = l;
            longest_hops = row.local_hops + row.global_hops;
        }
    }
    const double one_way_ns = longest + (longest_hops + 1) * to_ns(net.switch_latency) +
                              2 * (lat.endpoint_ns + wire.serialization_ns());
    longest_rtt_ = from_ns(2 * one_way_ns);
    rto_ = cfg_.transport.rto ? cfg_.transport.rto : SimTime(cfg_.transport.rto_multiplier * double(longest_rtt_));
    if (cfg_.flicr.flowlet_gap == 0)
        cfg_.flicr.flowlet_gap = longest_rtt_;

    // Ports: switch neighbours in canonical order, then the switch's
    // endpoint downlinks; NIC uplinks come last.
    const uint32_t n = topo.switch_count();
    switch_port_base_.resize(n + 1);
    for (SwitchId s = 0; s < n; ++s) {
        switch_port_base_[s] = static_cast<uint32_t>(ports_.size());
        for (const auto &adj : topo.neighbors(s)) {
            Port p;
            p.node = adj.peer;
            p.link = adj.link;
            p.latency = from_ns(topo.link(adj.link).propagation_ns) + net.switch_latency;
            ports_.push_back(std::move(p));
        }
        for (uint32_t j = 0; j < topo.endpoints_per_switch(); ++j) {
            const EndpointId e = s * topo.endpoints_per_switch() + j;
            Port p;
            p.node = n + e;
            p.link = topo.endpoint_link(e);
            p.latency = from_ns(topo.link(p.link).propagation_ns);
            ports_.push_back(std::move(p));
        }
    }
    switch_port_base_[n] = static_cast<uint32_t>(ports_.size());
    host_port_base_ = static_cast<uint32_t>(ports_.size());
    for (EndpointId e = 0; e < topo.endpoint_count(); ++e) {
        Port p;
        p.node = topo.switch_of(e);
        p.link = topo.endpoint_link(e);
        p.latency = from_ns(topo.link(p.link).propagation_ns) + net.switch_latency;
        p.nic = true;
        ports_.push_back(std::move(p));
    }
    hosts_.resize(topo.endpoint_count());
}

Simulation::~Simulation() = default;

uint64_t Simulation::cwnd_max_bytes() const { return cwnd_max_; }

uint64_t Simulation::live_packets(uint32_t flow) const { return flows_.at(flow).live; }

const LoadBalancer *Simulation::load_balancer(uint32_t flow) const { return flows_.at(flow).lb.get(); }

uint32_t Simulation::add_flows(const std::vector<FlowSpec> &specs) {
    if (ran_)
        throw Error("flows must be added before the simulation runs");
    const uint32_t base = static_cast<uint32_t>(flows_.size());
    const uint32_t payload = cfg_.transport.payload_bytes;
    for (size_t k = 0; k < specs.size(); ++k) {
        const FlowSpec &s = specs[k];
        if (s.src >= topo_.endpoint_count() || s.dst >= topo_.endpoint_count())
            throw InvalidParameter("flow endpoint out of range");
        if (s.src == s.dst)
            throw InvalidParameter("flow source equals destination");
        if (s.bytes == 0)
            throw InvalidParameter("flow size must be positive");
        Flow f;
        f.spec = s;
        f.scheme = s.scheme.value_or(cfg_.scheme);
        f.src_sw = topo_.switch_of(s.src);
        f.dst_sw = topo_.switch_of(s.dst);
        f.packets = static_cast<uint32_t>((s.bytes + payload - 1) / payload);
        f.psn.resize(f.packets);
        f.rx = ReceiverState(f.packets);
        f.rec.id = base + static_cast<uint32_t>(k);
        f.rec.tag = s.tag;
        f.rec.scheme = to_string(f.scheme);
        f.rec.src = s.src;
        f.rec.dst = s.dst;
        f.rec.bytes = s.bytes;
        f.rec.packets = f.packets;
        f.rec.start = s.start;
        if (s.tag == FlowTag::Monitored)
            ++monitored_flows_;
        flows_.push_back(std::move(f));
    }
    for (size_t k = 0; k < specs.size(); ++k) {
        for (uint32_t d : specs[k].depends_on) {
            const uint32_t dep = base + d;
            if (d >= specs.size() || dep == base + k)
                throw InvalidParameter("invalid flow dependency");
            flows_[dep].dependents.push_back(base + static_cast<uint32_t>(k));
            ++flows_[base + k].pending_deps;
        }
    }
    return base;
}

void Simulation::schedule(SimTime t, uint8_t type, uint32_t a, uint32_t b, uint32_t c) {
    events_.push(Event{t, seq_++, a, b, c, type});
}

uint32_t Simulation::alloc_packet() {
    if (!free_packets_.empty()) {
        const uint32_t id = free_packets_.back();
        free_packets_.pop_back();
        packets_[id] = Packet{};
        return id;
    }
    packets_.emplace_back();
    return static_cast<uint32_t>(packets_.size() - 1);
}

void Simulation::free_packet(uint32_t id) { free_packets_.push_back(id); }

const EVList &Simulation::paths_for(SwitchId src, SwitchId dst) { return catalog_.lookup(src, dst); }

const ValiantChoices &Simulation::valiant_for(SwitchId src, SwitchId dst) {
    const uint64_t key = (uint64_t(src) << 32) | dst;
    auto it = valiant_.find(key);
    if (it != valiant_.end())
        return *it->second;
    auto v = std::make_unique<ValiantChoices>(paths_for(src, dst));
    return *valiant_.emplace(key, std::move(v)).first->second;
}

RunResult Simulation::run() {
    if (ran_)
        throw Error("a simulation can only run once");
    ran_ = true;
    for (uint32_t i = 0; i < flows_.size(); ++i)
        if (flows_[i].pending_deps == 0)
            schedule(flows_[i].spec.start, kFlowStart, i);

    const auto wall_start = std::chrono::steady_clock::now();
    bool wall_expired = false;
    bool hit_limit = false;
    while (!events_.empty() && completed_flows_ < flows_.size()) {
        const Event ev = events_.top();
        if (ev.time > cfg_.time_limit) {
            hit_limit = true;
            break;
        }
        events_.pop();
        now_ = ev.time;
        ++counters_.events;
        switch (ev.type) {
        case kArrive:
            on_arrive(ev.a, ev.b);
            break;
        case kPortDone:
            on_port_done(ev.a);
            break;
        case kFlowStart:
            on_flow_start(ev.a);
            break;
        case kRto:
            on_rto(ev.a, ev.b, ev.c);
            break;
        }
        if (cfg_.stop_after_monitored && monitored_flows_ > 0 && completed_monitored_ == monitored_flows_)
            break;
        if (cfg_.wall_clock_limit_s > 0 && (counters_.events & 0xfffff) == 0) {
            const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - wall_start;
            if (spent.count() > cfg_.wall_clock_limit_s) {
                wall_expired = true;
                break;
            }
        }
    }

    RunResult result;
    result.counters = counters_;
    result.completed = completed_flows_ == flows_.size();
    result.wall_clock_expired = wall_expired;
    result.end_time = result.completed ? last_completion_ : hit_limit ? cfg_.time_limit : now_;
    result.topology_fingerprint = fingerprint(topo_);
    result.flows.reserve(flows_.size());
    for (auto &f : flows_) {
        FlowRecord r = f.rec;
        r.received = f.rx.received();
        r.ooo = f.rx.ooo();
        r.delivered_bytes = f.rx.delivered_bytes();
        r.in_network = f.live;
        result.flows.push_back(std::move(r));
    }
    return result;
}

void Simulation::on_flow_start(uint32_t id) {
    Flow &f = flows_[id];
    f.started = true;
    f.rec.start = now_;
    f.cc.emplace(cwnd_max_, cfg_.transport.mss(), cfg_.transport);
    if (!switch_routed(f.scheme) && f.src_sw != f.dst_sw) {
        f.paths = &paths_for(f.src_sw, f.dst_sw);
        BalancerContext ctx;
        ctx.paths = f.paths;
        ctx.spritz = cfg_.spritz;
        ctx.flicr = cfg_.flicr;
        ctx.tuple = FiveTuple{f.spec.src, f.spec.dst, static_cast<uint16_t>(id & 0xffff),
                              static_cast<uint16_t>(id >> 16), 17};
        ctx.seed = derive_seed(cfg_.seed, id + 1);
        f.lb = make_load_balancer(f.scheme, ctx);
    }
    hosts_[f.spec.src].flows.push_back(id);
    kick_host(f.spec.src);
}

void Simulation::kick_host(EndpointId e) {
    const uint32_t port = host_port_base_ + e;
    if (!ports_[port].busy)
        start_next(port);
}

bool Simulation::build_data_packet(Flow &f, uint32_t &out) {
    while (!f.retx.empty() && f.psn[f.retx.front()].status != kPendingRetx)
        f.retx.pop_front();
    uint32_t psn;
    bool retransmission = false;
    if (!f.retx.empty()) {
        psn = f.retx.front();
        retransmission = true;
    } else if (f.next_new < f.packets) {
        psn = f.next_new;
    } else {
        return false;
    }
    const uint32_t payload_full = cfg_.transport.payload_bytes;
    const uint64_t offset = uint64_t(psn) * payload_full;
    const uint32_t payload = static_cast<uint32_t>(std::min<uint64_t>(payload_full, f.spec.bytes - offset));
    const uint32_t bytes = cfg_.transport.header_bytes + payload;
    if (f.inflight > 0 && f.inflight + bytes > f.cc->cwnd())
        return false;
    if (retransmission)
        f.retx.pop_front();
    else
        ++f.next_new;

    const uint32_t id = alloc_packet();
    Packet &p = packets_[id];
    p.flow = f.rec.id;
    p.psn = psn;
    p.src = f.spec.src;
    p.dst = f.spec.dst;
    p.bytes = static_cast<uint16_t>(bytes);
    p.kind = kData;
    switch (f.scheme) {
    case Scheme::Minimal:
        p.mode = kModeMinimal;
        break;
    case Scheme::Valiant:
        p.mode = kModeValiant;
        break;
    case Scheme::UgalL:
        p.mode = kModeUgal;
        break;
    default:
        p.mode = kModeEv;
        if (f.lb) {
            const uint32_t idx = f.lb->select(now_);
            p.path = static_cast<uint16_t>(idx);
            p.ev = f.paths->entries[idx].ev();
        }
        break;
    }
    p.tx = ++tx_counter_;

    auto &st = f.psn[psn];
    st.status = kInFlight;
    st.tx = p.tx;
    st.path = p.path;
    f.inflight += bytes;
    ++f.live;
    ++f.rec.injected;
    if (retransmission)
        ++f.rec.retransmissions;
    ++counters_.injected;
    counters_.data_bytes += bytes;
    schedule(now_ + backoff_rto(rto_, st.timeouts, cfg_.transport.rto_backoff_cap), kRto, f.rec.id, psn, p.tx);
    out = id;
    return true;
}

bool Simulation::pull_data(EndpointId e, uint32_t &pkt) {
    Host &h = hosts_[e];
    const size_t n = h.flows.size();
    for (size_t k = 0; k < n; ++k) {
        const size_t i = (h.rr + k) % n;
        if (build_data_packet(flows_[h.flows[i]], pkt)) {
            h.rr = (i + 1) % n;
            return true;
        }
    }
    return false;
}

void Simulation::start_next(uint32_t port) {
    Port &q = ports_[port];
    uint32_t pkt;
    if (!q.ctrl.empty()) {
        pkt = q.ctrl.front();
        q.ctrl.pop_front();
    } else if (!q.data.empty()) {
        pkt = q.data.front();
        q.data.pop_front();
    } else if (q.nic) {
        if (!pull_data(port - host_port_base_, pkt))
            return;
    } else {
        return;
    }
    transmit(port, pkt);
}

void Simulation::transmit(uint32_t port, uint32_t pkt) {
    Port &q = ports_[port];
    q.busy = true;
    const SimTime done = now_ + serialization_time(packets_[pkt].bytes, cfg_.network.link_gbps);
    schedule(done, kPortDone, port);
    schedule(done + q.latency, kArrive, pkt, q.node);
}

void Simulation::on_port_done(uint32_t port) {
    ports_[port].busy = false;
    start_next(port);
}

void Simulation::on_arrive(uint32_t pkt, uint32_t node) {
    if (node < topo_.switch_count())
        switch_receive(pkt, node);
    else
        host_receive(pkt, node - topo_.switch_count());
}

void Simulation::drop_data(Packet &p, bool failed_link) {
    Flow &f = flows_[p.flow];
    --f.live;
    if (failed_link) {
        ++counters_.failed_link_drops;
        ++f.rec.failed_link_drops;
    } else {
        ++counters_.queue_drops;
        ++f.rec.queue_drops;
    }
}

uint32_t Simulation::route_data(Packet &p, SwitchId s) {
    const SwitchId src_sw = topo_.switch_of(p.src);
    const SwitchId dst_sw = topo_.switch_of(p.dst);
    switch (p.mode) {
    case kModeMinimal:
        return fwd_.default_index(s, dst_sw);
    case kModeEv:
        return fwd_.ev_step(s, src_sw, dst_sw, p.ev, p.stage);
    case kModeValiant: {
        if (p.stage == 0) {
            const ValiantChoices &vc = valiant_for(src_sw, dst_sw);
            p.stage = fwd_.same_group_pair(src_sw, dst_sw) ? 2 : 1;
            if (vc.empty())
                return fwd_.default_index(s, dst_sw);
            return fwd_.neighbor_index(s, vc.sample_first(rng_));
        }
        if (p.stage == 1) {
            p.stage = 2;
            const auto second = valiant_for(src_sw, dst_sw).sample_second(s, rng_);
            if (second)
                return fwd_.neighbor_index(s, *second);
        }
        return fwd_.default_index(s, dst_sw);
    }
    case kModeUgal: {
        // Decided once, at the source switch, from its local queues.
        const uint32_t min_index = fwd_.default_index(s, dst_sw);
        const uint32_t h_min = fwd_.routes().distance(s, dst_sw);
        const EVList &paths = paths_for(src_sw, dst_sw);
        std::vector<uint32_t> longer;
        for (uint32_t i = 0; i < paths.size(); ++i)
            if (paths.paths[i].size() - 1 > h_min)
                longer.push_back(i);
        if (longer.empty()) {
            p.mode = kModeMinimal;
            return min_index;
        }
        const uint32_t j = longer[uniform_index(rng_, longer.size())];
        const uint32_t val_index = fwd_.neighbor_index(s, paths.paths[j][1]);
        const uint64_t q_min = ports_[port_of_neighbor(s, min_index)].data.size();
        const uint64_t q_val = ports_[port_of_neighbor(s, val_index)].data.size();
        const uint32_t h_val = static_cast<uint32_t>(paths.paths[j].size() - 1);
        if (ugal_prefers_minimal(q_min, h_min, q_val, h_val)) {
            p.mode = kModeMinimal;
            return min_index;
        }
        p.mode = kModeEv;
        p.ev = paths.entries[j].ev();
        p.path = static_cast<uint16_t>(j);
        return fwd_.ev_step(s, src_sw, dst_sw, p.ev, p.stage);
    }
    }
    return fwd_.default_index(s, dst_sw);
}

void Simulation::switch_receive(uint32_t id, SwitchId s) {
    Packet &p = packets_[id];
    uint32_t port;
    if (p.kind == kData) {
        if (p.len >= kMaxRoute)
            throw Error("data packet exceeded the bounded path length");
        p.route[p.len++] = s;
        if (s == topo_.switch_of(p.dst)) {
            port = switch_port_base_[s] + topo_.degree(s) + p.dst % topo_.endpoints_per_switch();
        } else {
            port = port_of_neighbor(s, route_data(p, s));
        }
    } else {
        // Responses retrace the data packet's switches in reverse.
        if (p.pos + 1 >= p.len)
            port = switch_port_base_[s] + topo_.degree(s) + p.dst % topo_.endpoints_per_switch();
        else
            port = port_of_neighbor(s, fwd_.neighbor_index(s, p.route[++p.pos]));
    }
    if (!topo_.link(ports_[port].link).up) {
        if (p.kind == kData)
            drop_data(p, true);
        else
            ++counters_.failed_link_drops;
        free_packet(id);
        return;
    }
    enqueue(port, id);
}

void Simulation::enqueue(uint32_t port, uint32_t id) {
    Port &q = ports_[port];
    Packet &p = packets_[id];
    if (p.kind == kData && !p.trimmed) {
        if (q.data.size() < queue_capacity_) {
            const double prob = ecn_mark_probability(static_cast<uint32_t>(q.data.size()), queue_capacity_,
                                                     cfg_.network.ecn_kmin, cfg_.network.ecn_kmax);
            if (prob >= 1.0 || (prob > 0.0 && uniform01(rng_) < prob)) {
                if (!p.ecn)
                    ++counters_.ecn_marks;
                p.ecn = true;
            }
            q.data.push_back(id);
            max_occupancy_ = std::max<uint64_t>(max_occupancy_, q.data.size());
            if (!q.busy)
                start_next(port);
            return;
        }
        if (!cfg_.network.trimming) {
            drop_data(p, false);
            free_packet(id);
            return;
        }
        p.trimmed = true;
        p.bytes = static_cast<uint16_t>(cfg_.transport.header_bytes);
        ++counters_.trims;
    }
    if (q.ctrl.size() >= queue_capacity_) {
        if (p.kind == kData)
            drop_data(p, false);
        else
            ++counters_.queue_drops;
        free_packet(id);
        return;
    }
    q.ctrl.push_back(id);
    if (!q.busy)
        start_next(port);
}

void Simulation::send_control(uint32_t id, bool nack) {
    Packet &p = packets_[id];
    std::swap(p.src, p.dst);
    p.kind = nack ? kNack : kAck;
    p.bytes = static_cast<uint16_t>(cfg_.transport.header_bytes);
    std::reverse(p.route.begin(), p.route.begin() + p.len);
    p.pos = 0;
    ++counters_.control_packets;
    counters_.control_bytes += p.bytes;
    // The receiver's NIC sends control packets ahead of its own data.
    Port &nic = ports_[host_port_base_ + p.src];
    nic.ctrl.push_back(id);
    if (!nic.busy)
        start_next(host_port_base_ + p.src);
}

void Simulation::host_receive(uint32_t id, EndpointId e) {
    Packet &p = packets_[id];
    Flow &f = flows_[p.flow];
    if (p.kind == kData) {
        --f.live;
        if (p.trimmed) {
            ++counters_.delivered_trimmed;
            ++f.rec.trimmed;
            send_control(id, true);
        } else {
            ++counters_.delivered;
            const uint32_t payload = p.bytes - cfg_.transport.header_bytes;
            f.rx.on_data(p.psn, payload);
            send_control(id, false);
        }
        return;
    }

    // Feedback at the sender.
    const uint32_t psn = p.psn;
    const uint32_t tx = p.tx;
    const bool nack = p.kind == kNack;
    const bool marked = p.ecn;
    const uint32_t path = p.path;
    free_packet(id);
    (void)e;
    if (f.done) {
        ++counters_.stale_feedback;
        return;
    }
    auto &st = f.psn[psn];
    const uint32_t payload_full = cfg_.transport.payload_bytes;
    const uint32_t bytes = cfg_.transport.header_bytes +
                           static_cast<uint32_t>(std::min<uint64_t>(payload_full, f.spec.bytes - uint64_t(psn) * payload_full));
    if (nack) {
        if (st.status != kInFlight || st.tx != tx) {
            ++counters_.stale_feedback;
            return;
        }
        st.status = kPendingRetx;
        f.inflight -= bytes;
        f.retx.push_back(psn);
        ++f.rec.nacks;
        f.cc->on_nack(bytes);
        if (f.lb)
            f.lb->feedback({FeedbackKind::Nack, path, now_});
    } else {
        if (st.status == kAcked || st.status == kUnsent) {
            ++counters_.stale_feedback;
            return;
        }
        if (st.status == kInFlight)
            f.inflight -= bytes;
        st.status = kAcked;
        st.timeouts = 0;
        ++f.acked;
        ++f.rec.acks;
        if (marked)
            ++f.rec.ecn_acks;
        f.cc->on_ack(marked, bytes);
        if (f.lb)
            f.lb->feedback({marked ? FeedbackKind::AckEcn : FeedbackKind::AckClean, path, now_});
    }
    max_cwnd_seen_ = std::max(max_cwnd_seen_, f.cc->cwnd());
    min_cwnd_seen_ = std::min(min_cwnd_seen_, f.cc->cwnd());
    if (f.acked == f.packets) {
        complete(f);
        return;
    }
    kick_host(f.spec.src);
}

void Simulation::on_rto(uint32_t flow, uint32_t psn, uint32_t tx) {
    Flow &f = flows_[flow];
    if (f.done)
        return;
    auto &st = f.psn[psn];
    if (st.status != kInFlight || st.tx != tx)
        return;
    const uint32_t payload_full = cfg_.transport.payload_bytes;
    const uint32_t bytes = cfg_.transport.header_bytes +
                           static_cast<uint32_t>(std::min<uint64_t>(payload_full, f.spec.bytes - uint64_t(psn) * payload_full));
    st.status = kPendingRetx;
    if (st.timeouts < 0xff)
        ++st.timeouts;
    f.inflight -= bytes;
    f.retx.push_back(psn);
    ++f.rec.timeouts;
    if (f.lb)
        f.lb->feedback({FeedbackKind::Timeout, st.path, now_});
    kick_host(f.spec.src);
}

void Simulation::complete(Flow &f) {
    f.done = true;
    f.rec.completed = true;
    f.rec.end = now_;
    ++completed_flows_;
    if (f.spec.tag == FlowTag::Monitored)
        ++completed_monitored_;
    last_completion_ = std::max(last_completion_, now_);
    Host &h = hosts_[f.spec.src];
    auto it = std::find(h.flows.begin(), h.flows.end(), f.rec.id);
    if (it != h.flows.end()) {
        const size_t pos = static_cast<size_t>(it - h.flows.begin());
        h.flows.erase(it);
        if (h.rr > pos)
            --h.rr;
        if (h.rr >= h.flows.size())
            h.rr = 0;
    }
    for (uint32_t d : f.dependents) {
        Flow &next = flows_[d];
        if (--next.pending_deps == 0)
            schedule(std::max(now_, next.spec.start), kFlowStart, d);
    }
    kick_host(f.spec.src);
}

} // namespace spritz
