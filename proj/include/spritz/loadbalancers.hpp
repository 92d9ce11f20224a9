// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/paths.hpp"
#include "spritz/rng.hpp"
#include "spritz/sim_time.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spritz {

enum class Scheme : uint8_t { Minimal, Valiant, UgalL, Ecmp, Flicr, OpsU, OpsW, Scout, SprayU, SprayW };

const char *to_string(Scheme s);
std::optional<Scheme> parse_scheme(const std::string &name);
const std::vector<Scheme> &all_schemes();

// Minimal, Valiant and UGAL-L are decided by the switches; every other
// scheme picks an EV at the sender.
bool switch_routed(Scheme s);

enum class FeedbackKind : uint8_t { AckClean, AckEcn, Nack, Timeout };

struct Feedback {
    FeedbackKind kind = FeedbackKind::AckClean;
    uint32_t index = 0; // position of the EV in the path list
    SimTime now = 0;
};

struct SpritzParams {
    uint32_t explore_threshold = 44;
    uint32_t ecn_threshold = 8;
    uint32_t buffer_size = 8;
    double w_scale = 3.0;
    double min_bias_factor = 8.0;
    // Literal variant: overwrite w[0] with min_bias_factor instead of boosting
    // every minimal-category path.
    bool min_bias_index0_only = false;
    uint32_t ecn_rate_window = 64;
    double ecn_rate_trigger = 0.9;
    SimTime block_interval = 1'000'000'000; // 1 ms
    SimTime buffer_reset_interval = 0;      // 0 keeps the buffer for the whole run
};

struct FlicrParams {
    SimTime flowlet_gap = 0; // 0: use the longest-path RTT
    uint32_t ecn_window = 8;
    double ecn_fraction = 0.5;
};

// Weighted draw over a vector of non-negative weights.
class WeightedSampler {
  public:
    void assign(const std::vector<double> &w);
    // Throws NoViablePath if the total weight is zero.
    uint32_t sample(Rng &rng) const;
    double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  private:
    std::vector<double> cumulative_;
};

class LoadBalancer {
  public:
    virtual ~LoadBalancer() = default;
    // Index into the path list for the next packet.
    virtual uint32_t select(SimTime now) = 0;
    virtual void feedback(const Feedback &) {}
    virtual Scheme scheme() const = 0;
};

// Latency-derived weights plus temporary blocking, minimal bias and the ECN-rate window
// shared by every weighted sender-side policy.
class PathWeights {
  public:
    PathWeights(const EVList &paths, bool uniform, const SpritzParams &params);

    void block(uint32_t index, SimTime now);
    bool blocked(uint32_t index) const { return blocked_until_[index] != 0; }
    void record_ack(bool marked);
    double ecn_rate() const;
    bool biased() const { return biased_; }

    // Current sampling vector; blocked paths carry weight 0.
    const std::vector<double> &weights(SimTime now);
    uint32_t sample(Rng &rng, SimTime now);
    const std::vector<double> &base() const { return base_; }

  private:
    void refresh(SimTime now);

    const EVList &paths_;
    SpritzParams params_;
    std::vector<double> base_;
    std::vector<double> effective_;
    std::vector<SimTime> blocked_until_;
    SimTime next_unblock_ = kNever;
    std::vector<uint8_t> ecn_history_;
    uint32_t ecn_pos_ = 0, ecn_filled_ = 0, ecn_marked_ = 0;
    bool biased_ = false;
    bool dirty_ = true;
    WeightedSampler sampler_;
};

// Shared send logic of Scout and Spray with their two feedback rules.
class SpritzBalancer : public LoadBalancer {
  public:
    SpritzBalancer(Scheme scheme, const EVList &paths, const SpritzParams &params, uint64_t seed);

    uint32_t select(SimTime now) override;
    void feedback(const Feedback &fb) override;
    Scheme scheme() const override { return scheme_; }

    const std::deque<uint32_t> &buffer() const { return buffer_; }
    uint32_t packet_count() const { return packet_count_; }
    const std::vector<uint32_t> &ecn_counts() const { return ecn_counts_; }
    PathWeights &weights() { return weights_; }
    uint64_t explorations() const { return explorations_; }

  private:
    bool scout() const { return scheme_ == Scheme::Scout; }
    void remove_from_buffer(uint32_t index);

    Scheme scheme_;
    const EVList &paths_;
    SpritzParams params_;
    PathWeights weights_;
    Rng rng_;
    std::deque<uint32_t> buffer_;
    uint32_t packet_count_ = 0;
    std::vector<uint32_t> ecn_counts_;
    SimTime last_use_ = 0;
    uint64_t explorations_ = 0;
};

// Oblivious per-packet spraying; feedback is ignored.
class OpsBalancer : public LoadBalancer {
  public:
    OpsBalancer(bool weighted, const EVList &paths, const SpritzParams &params, uint64_t seed);
    uint32_t select(SimTime now) override;
    Scheme scheme() const override { return weighted_ ? Scheme::OpsW : Scheme::OpsU; }
    const std::vector<double> &weights() const { return weights_; }

  private:
    bool weighted_;
    uint32_t count_;
    std::vector<double> weights_;
    WeightedSampler sampler_;
    Rng rng_;
};

struct FiveTuple {
    uint32_t src = 0;
    uint32_t dst = 0;
    uint16_t sport = 0;
    uint16_t dport = 0;
    uint8_t proto = 17;
};

uint64_t five_tuple_hash(const FiveTuple &t);

// One path per flow from a hash of its five-tuple.
class EcmpBalancer : public LoadBalancer {
  public:
    EcmpBalancer(const EVList &paths, const FiveTuple &tuple);
    uint32_t select(SimTime) override { return index_; }
    Scheme scheme() const override { return Scheme::Ecmp; }

  private:
    uint32_t index_;
};

// Simplified flowlet repathing: the path is kept while packets are closer
// than the flowlet gap and no congestion was reported on it.
class FlicrBalancer : public LoadBalancer {
  public:
    FlicrBalancer(const EVList &paths, const SpritzParams &spritz, const FlicrParams &params, uint64_t seed);
    uint32_t select(SimTime now) override;
    void feedback(const Feedback &fb) override;
    Scheme scheme() const override { return Scheme::Flicr; }
    uint32_t current() const { return current_; }
    uint64_t repaths() const { return repaths_; }

  private:
    void repath(SimTime now);

    const EVList &paths_;
    FlicrParams params_;
    PathWeights weights_;
    Rng rng_;
    uint32_t current_ = 0;
    bool started_ = false;
    bool congested_ = false;
    SimTime last_send_ = 0;
    std::deque<uint8_t> recent_;
    uint64_t repaths_ = 0;
};

struct BalancerContext {
    const EVList *paths = nullptr;
    SpritzParams spritz;
    FlicrParams flicr;
    FiveTuple tuple;
    uint64_t seed = 0;
};

// Null for the switch-routed schemes.
std::unique_ptr<LoadBalancer> make_load_balancer(Scheme scheme, const BalancerContext &ctx);

} // namespace spritz
