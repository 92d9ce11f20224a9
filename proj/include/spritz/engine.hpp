// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/flow.hpp"
#include "spritz/loadbalancers.hpp"
#include "spritz/metrics.hpp"
#include "spritz/paths.hpp"
#include "spritz/rng.hpp"
#include "spritz/sim_time.hpp"
#include "spritz/topology.hpp"
#include "spritz/transport.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <queue>
#include <unordered_map>
#include <vector>

namespace spritz {

struct NetworkParams {
    double link_gbps = 400.0;
    SimTime switch_latency = 500'000; // 500 ns
    uint32_t queue_packets = 0;       // 0: 88 on Dragonfly, 92 on Slim Fly
    double ecn_kmin = 0.2;
    double ecn_kmax = 0.8;
    bool trimming = true;
};

uint32_t default_queue_packets(TopologyKind kind);

// Marking probability for a data packet that finds `occupancy` packets queued.
double ecn_mark_probability(uint32_t occupancy, uint32_t capacity, double kmin, double kmax);

// UGAL-L rule: minimal iff q_min * h_min <= q_val * h_val.
inline bool ugal_prefers_minimal(uint64_t q_min, uint32_t h_min, uint64_t q_val, uint32_t h_val) {
    return q_min * h_min <= q_val * h_val;
}

enum class SwitchRole : uint8_t { Ecmp1, Ecmp2, Default };

// Routing stage carried by each packet: 0 before ECMP 1, 1 before ECMP 2,
// 2 once the default table has taken over.
SwitchRole role_for_stage(uint8_t stage);

// Switch forwarding state derived from the pristine topology: canonical
// neighbour tables, the intra-group subset used for Dragonfly pairs inside
// one group, and the static minimal default table.
class Forwarding {
  public:
    explicit Forwarding(const Topology &pristine);

    const Topology &topology() const { return topo_; }
    const MinimalRoutes &routes() const { return routes_; }

    // Neighbour-table index the default table uses towards `dst`.
    uint32_t default_index(SwitchId at, SwitchId dst) const { return next_index_[size_t(at) * n_ + dst]; }
    bool same_group_pair(SwitchId src, SwitchId dst) const;

    // Neighbour-table index chosen by a switch for an EV-steered packet; the
    // packet's stage advances when it leaves an ECMP role.
    uint32_t ev_step(SwitchId at, SwitchId src, SwitchId dst, uint16_t ev, uint8_t &stage) const;

    // Switch sequence an EV produces from src to dst (both included).
    SwitchPath trace(SwitchId src, SwitchId dst, uint16_t ev) const;

    uint32_t neighbor_index(SwitchId at, SwitchId peer) const;

  private:
    const Topology &topo_;
    MinimalRoutes routes_;
    uint32_t n_;
    std::vector<uint16_t> next_index_;
    std::vector<std::vector<uint16_t>> intra_group_;
};

// Per-hop uniform choices among the next hops that still lie on a bounded
// path, as switches implementing Valiant routing do.
class ValiantChoices {
  public:
    explicit ValiantChoices(const EVList &paths);

    bool empty() const { return first_.empty(); }
    const std::vector<SwitchId> &first_hops() const { return first_; }
    // Second hops allowed after `first`; empty when the path ends there or
    // the pair only steers one hop.
    const std::vector<SwitchId> &second_hops(SwitchId first) const;

    SwitchId sample_first(Rng &rng) const;
    std::optional<SwitchId> sample_second(SwitchId first, Rng &rng) const;

  private:
    std::vector<SwitchId> first_;
    std::vector<std::vector<SwitchId>> second_;
};

struct SimulationConfig {
    Scheme scheme = Scheme::SprayW;
    NetworkParams network;
    TransportParams transport;
    SpritzParams spritz;
    FlicrParams flicr;
    uint64_t seed = 1;
    SimTime time_limit = 1'000'000'000'000; // 1 s
    double wall_clock_limit_s = 0;           // 0: no watchdog
    // End the run once every monitored flow has finished.
    bool stop_after_monitored = false;
};

class Simulation {
  public:
    // `topo` may carry failed links; routing state is built from its
    // pristine copy, so packets sent into a failed link are black-holed.
    Simulation(const Topology &topo, SimulationConfig cfg);
    ~Simulation();
    Simulation(const Simulation &) = delete;
    Simulation &operator=(const Simulation &) = delete;

    // Returns the index of the first added flow.
    uint32_t add_flows(const std::vector<FlowSpec> &flows);
    RunResult run();

    const Forwarding &forwarding() const { return fwd_; }
    uint32_t queue_capacity() const { return queue_capacity_; }
    SimTime rto() const { return rto_; }
    SimTime longest_rtt() const { return longest_rtt_; }
    uint64_t cwnd_max_bytes() const;
    uint64_t max_queue_occupancy() const { return max_occupancy_; }
    // Largest cwnd seen on any flow, for bound checks.
    uint64_t max_cwnd_seen() const { return max_cwnd_seen_; }
    uint64_t min_cwnd_seen() const { return min_cwnd_seen_; }
    // Live data packets per flow, for conservation checks.
    uint64_t live_packets(uint32_t flow) const;
    const LoadBalancer *load_balancer(uint32_t flow) const;

  private:
    struct Packet;
    struct Port;
    struct Flow;
    struct Host;
    struct Event {
        SimTime time;
        uint64_t seq;
        uint32_t a, b, c;
        uint8_t type;
        bool operator>(const Event &o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    void schedule(SimTime t, uint8_t type, uint32_t a, uint32_t b = 0, uint32_t c = 0);
    uint32_t alloc_packet();
    void free_packet(uint32_t id);

    void on_arrive(uint32_t pkt, uint32_t node);
    void on_port_done(uint32_t port);
    void on_flow_start(uint32_t flow);
    void on_rto(uint32_t flow, uint32_t psn, uint32_t tx);

    void switch_receive(uint32_t pkt, SwitchId s);
    void host_receive(uint32_t pkt, EndpointId e);
    uint32_t route_data(Packet &p, SwitchId s);
    void enqueue(uint32_t port, uint32_t pkt);
    void start_next(uint32_t port);
    void transmit(uint32_t port, uint32_t pkt);
    void kick_host(EndpointId e);
    bool pull_data(EndpointId e, uint32_t &pkt);
    bool build_data_packet(Flow &f, uint32_t &pkt);
    void drop_data(Packet &p, bool failed_link);
    void complete(Flow &f);
    void send_control(uint32_t data_pkt, bool nack);

    const EVList &paths_for(SwitchId src, SwitchId dst);
    const ValiantChoices &valiant_for(SwitchId src, SwitchId dst);
    uint32_t port_of_neighbor(SwitchId s, uint32_t index) const { return switch_port_base_[s] + index; }

    Topology topo_;
    Topology pristine_;
    SimulationConfig cfg_;
    Forwarding fwd_;
    PathCatalog catalog_;
    std::unordered_map<uint64_t, std::unique_ptr<ValiantChoices>> valiant_;

    uint32_t queue_capacity_ = 0;
    SimTime rto_ = 0;
    SimTime longest_rtt_ = 0;
    uint64_t cwnd_max_ = 0;

    std::vector<Port> ports_;
    std::vector<uint32_t> switch_port_base_;
    uint32_t host_port_base_ = 0;
    std::vector<Host> hosts_;
    std::vector<Flow> flows_;
    std::vector<Packet> packets_;
    std::vector<uint32_t> free_packets_;

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
    uint64_t seq_ = 0;
    SimTime now_ = 0;
    Rng rng_;
    Counters counters_;
    uint32_t tx_counter_ = 0;
    uint32_t completed_flows_ = 0;
    uint32_t monitored_flows_ = 0;
    uint32_t completed_monitored_ = 0;
    SimTime last_completion_ = 0;
    uint64_t max_occupancy_ = 0;
    uint64_t max_cwnd_seen_ = 0;
    uint64_t min_cwnd_seen_ = UINT64_MAX;
    bool ran_ = false;
};

} // namespace spritz
