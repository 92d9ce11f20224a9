// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/experiment.hpp"

#include "spritz/errors.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace spritz {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class Reader {
  public:
    Reader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
    }

    std::string field(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string &key) const { return j_.contains(key); }

    const json *take(const std::string &key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null())
            return nullptr;
        return &*it;
    }

    template <class T> void integer(const std::string &key, T &out, double lo, double hi) {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_number_integer())
            throw ConfigError(field(key), "expected an integer");
        const double d = v->is_number_unsigned() ? double(v->get<uint64_t>()) : double(v->get<int64_t>());
        if (d < lo || d > hi)
            throw ConfigError(field(key), "value out of range");
        out = v->is_number_unsigned() ? static_cast<T>(v->get<uint64_t>()) : static_cast<T>(v->get<int64_t>());
    }

    template <class T> void integer(const std::string &key, std::optional<T> &out, double lo, double hi) {
        if (!has(key) || j_.at(key).is_null()) {
            take(key);
            return;
        }
        T v{};
        integer(key, v, lo, hi);
        out = v;
    }

    void real(const std::string &key, double &out, double lo, double hi) {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_number())
            throw ConfigError(field(key), "expected a number");
        const double d = v->get<double>();
        if (!std::isfinite(d) || d < lo || d > hi)
            throw ConfigError(field(key), "value out of range");
        out = d;
    }

    void time_ns(const std::string &key, SimTime &out, double lo_ns = 0) {
        double ns = to_ns(out);
        real(key, ns, lo_ns, 9.2e9 * 1e3);
        out = from_ns(ns);
    }

    void boolean(const std::string &key, bool &out) {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_boolean())
            throw ConfigError(field(key), "expected true or false");
        out = v->get<bool>();
    }

    void string(const std::string &key, std::string &out) {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_string())
            throw ConfigError(field(key), "expected a string");
        out = v->get<std::string>();
    }

    std::optional<Reader> child(const std::string &key) {
        const json *v = take(key);
        if (!v)
            return std::nullopt;
        return Reader(*v, field(key));
    }

    void done() const {
        for (const auto &[key, _] : j_.items())
            if (!seen_.count(key))
                throw ConfigError(field(key), "unknown key");
    }

  private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

constexpr double kMaxU32 = std::numeric_limits<uint32_t>::max();
constexpr double kMaxU64 = 1.8e19;

void read_topology(Reader &r, TopologyConfig &t) {
    std::string kind = t.kind == TopologyKind::Dragonfly ? "dragonfly" : "slimfly";
    r.string("kind", kind);
    if (kind == "dragonfly")
        t.kind = TopologyKind::Dragonfly;
    else if (kind == "slimfly")
        t.kind = TopologyKind::SlimFly;
    else
        throw ConfigError(r.field("kind"), "expected dragonfly or slimfly");
    if (t.kind == TopologyKind::Dragonfly) {
        r.integer("p", t.dragonfly.p, 1, 1024);
        r.integer("a", t.dragonfly.a, 1, 1024);
        r.integer("h", t.dragonfly.h, 1, 1024);
    } else {
        r.integer("q", t.slimfly.q, 2, 1024);
        r.integer("p", t.slimfly.p, 1, 1024);
        std::optional<int> delta = t.slimfly.delta;
        r.integer("delta", delta, -1, 1);
        t.slimfly.delta = delta;
    }
    r.real("local_ns", t.latencies.local_ns, 0, 1e9);
    r.real("global_ns", t.latencies.global_ns, 0, 1e9);
    r.real("endpoint_ns", t.latencies.endpoint_ns, 0, 1e9);
    r.done();
}

void read_workload(Reader &r, WorkloadConfig &w) {
    std::string kind = to_string(w.kind);
    r.string("kind", kind);
    const auto k = parse_workload_kind(kind);
    if (!k)
        throw ConfigError(r.field("kind"), "unknown workload '" + kind + "'");
    w.kind = *k;
    r.integer("flow_bytes", w.flow_bytes, 1, kMaxU64);
    r.boolean("cross_group", w.cross_group);
    if (auto m = r.child("motivational")) {
        m->integer("free_groups", w.motivational.free_groups, 0, kMaxU32);
        m->integer("monitored_bytes", w.motivational.monitored_bytes, 1, kMaxU64);
        m->integer("background_bytes", w.motivational.background_bytes, 1, kMaxU64);
        m->boolean("background", w.motivational.background);
        m->integer("src", w.motivational.src, 0, kMaxU32);
        m->integer("dst", w.motivational.dst, 0, kMaxU32);
        m->done();
    }
    if (auto i = r.child("incast")) {
        i->integer("senders", w.incast_senders, 1, kMaxU32);
        i->integer("receiver", w.incast_receiver, 0, kMaxU32);
        i->done();
    }
    if (auto c = r.child("collective")) {
        std::string algo = to_string(w.collective.algorithm);
        c->string("algorithm", algo);
        const auto a = parse_collective(algo);
        if (!a)
            throw ConfigError(c->field("algorithm"), "unknown collective '" + algo + "'");
        w.collective.algorithm = *a;
        c->integer("participants", w.collective.participants, 2, kMaxU32);
        c->integer("message_bytes", w.collective.message_bytes, 1, kMaxU64);
        c->integer("parallel", w.collective.parallel, 1, kMaxU32);
        c->integer("background_bytes", w.collective.background_bytes, 0, kMaxU64);
        c->done();
    }
    if (auto t = r.child("trace")) {
        t->string("cdf", w.trace.cdf);
        t->real("load", w.trace.load, 0, 1);
        t->time_ns("duration_ns", w.trace.duration);
        t->integer("max_senders_per_receiver", w.trace.max_senders_per_receiver, 1, kMaxU32);
        t->done();
    }
    r.string("schedule", w.schedule);
    r.done();
}

} // namespace

const char *to_string(WorkloadKind k) {
    switch (k) {
    case WorkloadKind::Permutation:
        return "permutation";
    case WorkloadKind::Adversarial:
        return "adversarial";
    case WorkloadKind::Motivational:
        return "motivational";
    case WorkloadKind::IncastBystanders:
        return "incast_bystanders";
    case WorkloadKind::Collective:
        return "collective";
    case WorkloadKind::Trace:
        return "trace";
    case WorkloadKind::Schedule:
        return "schedule";
    }
    return "?";
}

std::optional<WorkloadKind> parse_workload_kind(const std::string &s) {
    for (auto k : {WorkloadKind::Permutation, WorkloadKind::Adversarial, WorkloadKind::Motivational,
                   WorkloadKind::IncastBystanders, WorkloadKind::Collective, WorkloadKind::Trace,
                   WorkloadKind::Schedule})
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

ExperimentConfig parse_config(const json &j) {
    ExperimentConfig cfg;
    Reader r(j, "");
    if (auto t = r.child("topology"))
        read_topology(*t, cfg.topology);
    {
        std::string scheme = to_string(cfg.scheme);
        r.string("scheme", scheme);
        const auto s = parse_scheme(scheme);
        if (!s)
            throw ConfigError("scheme", "unknown scheme '" + scheme + "'");
        cfg.scheme = *s;
    }
    if (auto w = r.child("workload"))
        read_workload(*w, cfg.workload);
    if (auto n = r.child("network")) {
        auto &net = cfg.network;
        n->real("link_gbps", net.link_gbps, 1e-3, 1e6);
        n->time_ns("switch_latency_ns", net.switch_latency);
        n->integer("queue_packets", net.queue_packets, 0, kMaxU32);
        n->real("ecn_kmin", net.ecn_kmin, 0, 1);
        n->real("ecn_kmax", net.ecn_kmax, 0, 1);
        n->boolean("trimming", net.trimming);
        n->done();
        if (!(net.ecn_kmin < net.ecn_kmax))
            throw ConfigError("network.ecn_kmin", "must be below ecn_kmax");
    }
    if (auto t = r.child("transport")) {
        auto &tp = cfg.transport;
        t->integer("header_bytes", tp.header_bytes, 1, 65535);
        t->integer("payload_bytes", tp.payload_bytes, 1, 65535);
        t->real("dctcp_gain", tp.dctcp_gain, 0, 1);
        t->integer("fast_increase_threshold", tp.fast_increase_threshold, 1, kMaxU32);
        t->real("quick_adapt_threshold", tp.quick_adapt_threshold, 0, 1);
        t->real("cwnd_bdp_multiplier", tp.cwnd_bdp_multiplier, 1e-6, 1e6);
        t->integer("bdp_packets", tp.bdp_packets, 0, kMaxU32);
        t->time_ns("rto_ns", tp.rto);
        t->real("rto_multiplier", tp.rto_multiplier, 1e-6, 1e6);
        t->integer("rto_backoff_cap", tp.rto_backoff_cap, 1, 1 << 20);
        t->done();
        if (tp.header_bytes + tp.payload_bytes > 65535)
            throw ConfigError("transport.payload_bytes", "packet larger than 64 KiB");
    }
    if (auto s = r.child("spritz")) {
        auto &sp = cfg.spritz;
        s->integer("explore_threshold", sp.explore_threshold, 1, kMaxU32);
        s->integer("ecn_threshold", sp.ecn_threshold, 0, kMaxU32);
        s->integer("buffer_size", sp.buffer_size, 1, 65535);
        s->real("w_scale", sp.w_scale, 1e-6, 1e6);
        s->real("min_bias_factor", sp.min_bias_factor, 0, 1e9);
        s->boolean("min_bias_index0_only", sp.min_bias_index0_only);
        s->integer("ecn_rate_window", sp.ecn_rate_window, 1, 1 << 20);
        s->real("ecn_rate_trigger", sp.ecn_rate_trigger, 0, 1);
        s->time_ns("block_interval_ns", sp.block_interval);
        s->time_ns("buffer_reset_interval_ns", sp.buffer_reset_interval);
        s->done();
    }
    if (auto f = r.child("flicr")) {
        f->time_ns("flowlet_gap_ns", cfg.flicr.flowlet_gap);
        f->integer("ecn_window", cfg.flicr.ecn_window, 1, 1 << 20);
        f->real("ecn_fraction", cfg.flicr.ecn_fraction, 0, 1);
        f->done();
    }
    if (auto f = r.child("failures")) {
        f->real("fraction", cfg.failures.fraction, 0, 1);
        f->integer("seed", cfg.failures.seed, 0, kMaxU64);
        f->done();
    }
    r.integer("seed", cfg.seed, 0, kMaxU64);
    r.time_ns("time_limit_ns", cfg.time_limit, 1e-3);
    r.real("watchdog_s", cfg.watchdog_s, 0, 1e9);
    r.string("output_dir", cfg.output_dir);
    r.done();
    return cfg;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config", "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error &e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

json config_to_json(const ExperimentConfig &cfg) {
    json topo;
    const auto &t = cfg.topology;
    if (t.kind == TopologyKind::Dragonfly) {
        topo = {{"kind", "dragonfly"}, {"p", t.dragonfly.p}, {"a", t.dragonfly.a}, {"h", t.dragonfly.h}};
    } else {
        topo = {{"kind", "slimfly"}, {"q", t.slimfly.q}, {"p", t.slimfly.p}};
        if (t.slimfly.delta)
            topo["delta"] = *t.slimfly.delta;
    }
    topo["local_ns"] = t.latencies.local_ns;
    topo["global_ns"] = t.latencies.global_ns;
    topo["endpoint_ns"] = t.latencies.endpoint_ns;

    const auto &w = cfg.workload;
    json motivational = {{"free_groups", w.motivational.free_groups},
                         {"monitored_bytes", w.motivational.monitored_bytes},
                         {"background_bytes", w.motivational.background_bytes},
                         {"background", w.motivational.background},
                         {"src", w.motivational.src},
                         {"dst", w.motivational.dst ? json(*w.motivational.dst) : json(nullptr)}};
    json incast = {{"senders", w.incast_senders ? json(*w.incast_senders) : json(nullptr)},
                   {"receiver", w.incast_receiver ? json(*w.incast_receiver) : json(nullptr)}};
    json workload = {
        {"kind", to_string(w.kind)},
        {"flow_bytes", w.flow_bytes},
        {"cross_group", w.cross_group},
        {"motivational", motivational},
        {"incast", incast},
        {"collective",
         {{"algorithm", to_string(w.collective.algorithm)},
          {"participants", w.collective.participants},
          {"message_bytes", w.collective.message_bytes},
          {"parallel", w.collective.parallel},
          {"background_bytes", w.collective.background_bytes}}},
        {"trace",
         {{"cdf", w.trace.cdf},
          {"load", w.trace.load},
          {"duration_ns", to_ns(w.trace.duration)},
          {"max_senders_per_receiver", w.trace.max_senders_per_receiver}}},
        {"schedule", w.schedule},
    };
    const auto &n = cfg.network;
    const auto &tp = cfg.transport;
    const auto &sp = cfg.spritz;
    return json{
        {"topology", topo},
        {"scheme", to_string(cfg.scheme)},
        {"workload", workload},
        {"network",
         {{"link_gbps", n.link_gbps},
          {"switch_latency_ns", to_ns(n.switch_latency)},
          {"queue_packets", n.queue_packets},
          {"ecn_kmin", n.ecn_kmin},
          {"ecn_kmax", n.ecn_kmax},
          {"trimming", n.trimming}}},
        {"transport",
         {{"header_bytes", tp.header_bytes},
          {"payload_bytes", tp.payload_bytes},
          {"dctcp_gain", tp.dctcp_gain},
          {"fast_increase_threshold", tp.fast_increase_threshold},
          {"quick_adapt_threshold", tp.quick_adapt_threshold},
          {"cwnd_bdp_multiplier", tp.cwnd_bdp_multiplier},
          {"bdp_packets", tp.bdp_packets},
          {"rto_ns", to_ns(tp.rto)},
          {"rto_multiplier", tp.rto_multiplier},
          {"rto_backoff_cap", tp.rto_backoff_cap}}},
        {"spritz",
         {{"explore_threshold", sp.explore_threshold},
          {"ecn_threshold", sp.ecn_threshold},
          {"buffer_size", sp.buffer_size},
          {"w_scale", sp.w_scale},
          {"min_bias_factor", sp.min_bias_factor},
          {"min_bias_index0_only", sp.min_bias_index0_only},
          {"ecn_rate_window", sp.ecn_rate_window},
          {"ecn_rate_trigger", sp.ecn_rate_trigger},
          {"block_interval_ns", to_ns(sp.block_interval)},
          {"buffer_reset_interval_ns", to_ns(sp.buffer_reset_interval)}}},
        {"flicr",
         {{"flowlet_gap_ns", to_ns(cfg.flicr.flowlet_gap)},
          {"ecn_window", cfg.flicr.ecn_window},
          {"ecn_fraction", cfg.flicr.ecn_fraction}}},
        {"failures", {{"fraction", cfg.failures.fraction}, {"seed", cfg.failures.seed}}},
        {"seed", cfg.seed},
        {"time_limit_ns", to_ns(cfg.time_limit)},
        {"watchdog_s", cfg.watchdog_s},
        {"output_dir", cfg.output_dir},
    };
}

json topology_to_json(const Topology &topo) {
    auto node = [](const NodeId &n) {
        return json{{"kind", n.kind == NodeKind::Switch ? "switch" : "endpoint"}, {"index", n.index}};
    };
    json params;
    if (const auto *df = std::get_if<DragonflyParams>(&topo.params()))
        params = {{"p", df->p}, {"a", df->a}, {"h", df->h}};
    else if (const auto *sf = std::get_if<SlimFlyParams>(&topo.params()))
        params = {{"q", sf->q}, {"p", sf->p}};
    const auto &lat = topo.latencies();
    params["local_ns"] = lat.local_ns;
    params["global_ns"] = lat.global_ns;
    params["endpoint_ns"] = lat.endpoint_ns;

    json switches = json::array();
    for (SwitchId s = 0; s < topo.switch_count(); ++s)
        switches.push_back({{"id", s}, {"group", topo.group_of(s)}, {"degree", topo.degree(s)}});
    json links = json::array();
    for (const auto &l : topo.links())
        links.push_back({{"a", node(l.a)},
                         {"b", node(l.b)},
                         {"class", to_string(l.cls)},
                         {"propagation_ns", l.propagation_ns},
                         {"up", l.up}});
    char fp[32];
    std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(fingerprint(topo)));
    return json{{"kind", topo.kind() == TopologyKind::Dragonfly ? "dragonfly" : "slimfly"},
                {"parameters", params},
                {"switches", topo.switch_count()},
                {"endpoints", topo.endpoint_count()},
                {"endpoints_per_switch", topo.endpoints_per_switch()},
                {"groups", topo.group_count()},
                {"diameter", diameter(topo)},
                {"failed_links", topo.failed_link_count()},
                {"fingerprint", fp},
                {"nodes", switches},
                {"links", links}};
}

Topology build_topology(const ExperimentConfig &cfg) {
    const auto &t = cfg.topology;
    Topology topo = t.kind == TopologyKind::Dragonfly ? build_dragonfly(t.dragonfly, t.latencies)
                                                      : build_slimfly(t.slimfly, t.latencies);
    if (cfg.failures.fraction > 0)
        topo = fail_links(topo, cfg.failures.fraction, cfg.failures.seed);
    return topo;
}

std::vector<FlowSpec> build_workload(const ExperimentConfig &cfg, const Topology &topo) {
    const auto &w = cfg.workload;
    switch (w.kind) {
    case WorkloadKind::Permutation:
        return gen_permutation(topo, w.cross_group, w.flow_bytes, cfg.seed);
    case WorkloadKind::Adversarial:
        return gen_adversarial(topo, w.flow_bytes, cfg.seed);
    case WorkloadKind::Motivational:
        return gen_motivational(topo, w.motivational);
    case WorkloadKind::IncastBystanders: {
        IncastParams p = scaled_incast(topo);
        if (w.incast_senders)
            p.senders = *w.incast_senders;
        if (w.incast_receiver)
            p.receiver = *w.incast_receiver;
        p.flow_bytes = w.flow_bytes;
        p.seed = cfg.seed;
        return gen_incast_bystanders(topo, p);
    }
    case WorkloadKind::Collective: {
        CollectiveSpec spec;
        spec.algorithm = w.collective.algorithm;
        spec.participants = random_participants(topo, w.collective.participants, cfg.seed);
        spec.message_bytes = w.collective.message_bytes;
        spec.parallel = w.collective.parallel;
        return gen_collective_with_background(topo, spec, w.collective.background_bytes, cfg.seed);
    }
    case WorkloadKind::Trace: {
        const SizeCdf cdf = load_size_cdf(w.trace.cdf.empty() ? default_websearch_cdf_path() : w.trace.cdf);
        TraceParams p;
        p.load = w.trace.load;
        p.duration = w.trace.duration;
        p.max_senders_per_receiver = w.trace.max_senders_per_receiver;
        p.link_gbps = cfg.network.link_gbps;
        p.seed = cfg.seed;
        return gen_trace(topo, cdf, p);
    }
    case WorkloadKind::Schedule: {
        if (w.schedule.empty())
            throw ConfigError("workload.schedule", "a schedule file is required");
        std::ifstream in(w.schedule);
        if (!in)
            throw ConfigError("workload.schedule", "cannot open " + w.schedule);
        json j;
        try {
            in >> j;
        } catch (const json::parse_error &e) {
            throw ConfigError("workload.schedule", std::string("invalid JSON: ") + e.what());
        }
        return schedule_from_json(j);
    }
    }
    return {};
}

SimulationConfig simulation_config(const ExperimentConfig &cfg) {
    SimulationConfig s;
    s.scheme = cfg.scheme;
    s.network = cfg.network;
    s.transport = cfg.transport;
    s.spritz = cfg.spritz;
    s.flicr = cfg.flicr;
    s.seed = cfg.seed;
    s.time_limit = cfg.time_limit;
    s.wall_clock_limit_s = cfg.watchdog_s;
    s.stop_after_monitored = cfg.workload.kind == WorkloadKind::Motivational;
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig &cfg, const std::string &export_dir) {
    const Topology topo = build_topology(cfg);
    const auto flows = build_workload(cfg, topo);
    Simulation sim(topo, simulation_config(cfg));
    sim.add_flows(flows);
    ExperimentResult out;
    out.run = sim.run();
    const json resolved = config_to_json(cfg);
    out.summary = summary_json(out.run, resolved, cfg.seed);
    if (!export_dir.empty())
        export_run(export_dir, out.run, resolved, cfg.seed);
    return out;
}

std::string default_output_dir(const std::string &leaf) {
    const char *root = std::getenv("SPRITZ_OUTPUT_ROOT");
    const std::filesystem::path base = root && *root ? root : "results";
    return (base / leaf).string();
}

std::string cell_name(Scheme scheme, uint64_t seed) { return std::string(to_string(scheme)) + "_seed" + std::to_string(seed); }

std::vector<SweepCell> run_sweep(const ExperimentConfig &base, const std::vector<Scheme> &schemes,
                                 const std::vector<uint64_t> &seeds, const std::string &root, unsigned threads) {
    if (schemes.empty())
        throw ConfigError("schemes", "at least one scheme is required");
    if (seeds.empty())
        throw ConfigError("seeds", "at least one seed is required");
    std::vector<SweepCell> cells;
    for (Scheme s : schemes)
        for (uint64_t seed : seeds)
            cells.push_back({s, seed, (std::filesystem::path(root) / cell_name(s, seed)).string(), false, {}});

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < cells.size(); i = next++) {
            SweepCell &cell = cells[i];
            try {
                ExperimentConfig cfg = base;
                cfg.scheme = cell.scheme;
                cfg.seed = cell.seed;
                cfg.output_dir = cell.dir;
                run_experiment(cfg, cell.dir);
                cell.ok = true;
            } catch (const std::exception &e) {
                cell.error = e.what();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < n; ++k)
            pool.emplace_back(worker);
        for (auto &t : pool)
            t.join();
    }
    return cells;
}

} // namespace spritz
