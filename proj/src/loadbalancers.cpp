// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/loadbalancers.hpp"

#include "spritz/errors.hpp"

#include <algorithm>
#include <cassert>

namespace spritz {

namespace {

struct SchemeName {
    Scheme scheme;
    const char *name;
};

constexpr SchemeName kSchemeNames[] = {
    {Scheme::Minimal, "minimal"}, {Scheme::Valiant, "valiant"}, {Scheme::UgalL, "ugal_l"},
    {Scheme::Ecmp, "ecmp"},       {Scheme::Flicr, "flicr"},     {Scheme::OpsU, "ops_u"},
    {Scheme::OpsW, "ops_w"},      {Scheme::Scout, "scout"},     {Scheme::SprayU, "spray_u"},
    {Scheme::SprayW, "spray_w"},
};

} // namespace

const char *to_string(Scheme s) {
    for (const auto &n : kSchemeNames)
        if (n.scheme == s)
            return n.name;
    return "?";
}

std::optional<Scheme> parse_scheme(const std::string &name) {
    for (const auto &n : kSchemeNames)
        if (name == n.name)
            return n.scheme;
    return std::nullopt;
}

const std::vector<Scheme> &all_schemes() {
    static const std::vector<Scheme> all = [] {
        std::vector<Scheme> v;
        for (const auto &n : kSchemeNames)
            v.push_back(n.scheme);
        return v;
    }();
    return all;
}

bool switch_routed(Scheme s) { return s == Scheme::Minimal || s == Scheme::Valiant || s == Scheme::UgalL; }

void WeightedSampler::assign(const std::vector<double> &w) {
    cumulative_.resize(w.size());
    double sum = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        sum += w[i];
        cumulative_[i] = sum;
    }
}

uint32_t WeightedSampler::sample(Rng &rng) const {
    if (!(total() > 0.0))
        throw NoViablePath("all path weights are zero");
    const double x = uniform01(rng) * total();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    // Skip zero-weight entries that share the cumulative value of their predecessor.
    if (it == cumulative_.end())
        --it;
    uint32_t i = static_cast<uint32_t>(it - cumulative_.begin());
    while (i > 0 && cumulative_[i] == cumulative_[i - 1])
        --i;
    return i;
}

PathWeights::PathWeights(const EVList &paths, bool uniform, const SpritzParams &params)
    : paths_(paths), params_(params), blocked_until_(paths.size(), 0), ecn_history_(params.ecn_rate_window, 0) {
    if (paths.empty())
        throw NoViablePath("empty path list");
    if (uniform)
        base_.assign(paths.size(), 1.0);
    else
        base_ = init_weights(paths.latencies_ns, params.w_scale);
    effective_ = base_;
}

void PathWeights::block(uint32_t index, SimTime now) {
    blocked_until_[index] = now + params_.block_interval;
    next_unblock_ = std::min(next_unblock_, blocked_until_[index]);
    dirty_ = true;
}

void PathWeights::record_ack(bool marked) {
    if (ecn_history_.empty())
        return;
    if (ecn_filled_ == ecn_history_.size())
        ecn_marked_ -= ecn_history_[ecn_pos_];
    else
        ++ecn_filled_;
    ecn_history_[ecn_pos_] = marked ? 1 : 0;
    ecn_marked_ += ecn_history_[ecn_pos_];
    ecn_pos_ = (ecn_pos_ + 1) % ecn_history_.size();
    const bool bias = ecn_rate() > params_.ecn_rate_trigger;
    if (bias != biased_) {
        biased_ = bias;
        dirty_ = true;
    }
}

double PathWeights::ecn_rate() const {
    // The rate is only meaningful once the window has filled.
    if (ecn_filled_ < ecn_history_.size() || ecn_history_.empty())
        return 0.0;
    return double(ecn_marked_) / double(ecn_filled_);
}

void PathWeights::refresh(SimTime now) {
    if (now >= next_unblock_) {
        next_unblock_ = kNever;
        for (auto &t : blocked_until_) {
            if (t != 0 && t <= now)
                t = 0;
            else if (t != 0)
                next_unblock_ = std::min(next_unblock_, t);
        }
        dirty_ = true;
    }
    if (!dirty_)
        return;
    dirty_ = false;
    effective_ = base_;
    if (biased_) {
        if (params_.min_bias_index0_only) {
            effective_[0] = params_.min_bias_factor;
        } else {
            for (size_t i = 0; i < effective_.size(); ++i)
                if (paths_.types[i].minimal_category())
                    effective_[i] *= params_.min_bias_factor;
        }
    }
    for (size_t i = 0; i < effective_.size(); ++i)
        if (blocked_until_[i] != 0)
            effective_[i] = 0.0;
    sampler_.assign(effective_);
}

const std::vector<double> &PathWeights::weights(SimTime now) {
    refresh(now);
    return effective_;
}

uint32_t PathWeights::sample(Rng &rng, SimTime now) {
    refresh(now);
    if (sampler_.total() > 0.0)
        return sampler_.sample(rng);
    // Every path is blocked: fall back to a uniform draw so the flow is never wedged.
    return static_cast<uint32_t>(uniform_index(rng, effective_.size()));
}

SpritzBalancer::SpritzBalancer(Scheme scheme, const EVList &paths, const SpritzParams &params, uint64_t seed)
    : scheme_(scheme), paths_(paths), params_(params), weights_(paths, scheme == Scheme::SprayU, params), rng_(seed),
      ecn_counts_(paths.size(), 0) {
    if (scheme != Scheme::Scout && scheme != Scheme::SprayU && scheme != Scheme::SprayW)
        throw InvalidParameter("SpritzBalancer needs scout, spray_u or spray_w");
}

uint32_t SpritzBalancer::select(SimTime now) {
    if (params_.buffer_reset_interval > 0 && !buffer_.empty() && now - last_use_ > params_.buffer_reset_interval)
        buffer_.clear();
    last_use_ = now;

    // The counter is advanced before the check so that exactly one in every
    // explore_threshold + 1 sends is a forced fresh sample.
    ++packet_count_;
    if (packet_count_ > params_.explore_threshold) {
        packet_count_ = 0;
        ++explorations_;
        return weights_.sample(rng_, now);
    }
    if (buffer_.empty())
        return weights_.sample(rng_, now);
    const uint32_t index = buffer_.front();
    if (!scout())
        buffer_.pop_front();
    return index;
}

void SpritzBalancer::remove_from_buffer(uint32_t index) {
    buffer_.erase(std::remove(buffer_.begin(), buffer_.end(), index), buffer_.end());
}

void SpritzBalancer::feedback(const Feedback &fb) {
    const uint32_t i = fb.index;
    if (i >= paths_.size())
        return;
    if (fb.kind == FeedbackKind::AckClean || fb.kind == FeedbackKind::AckEcn)
        weights_.record_ack(fb.kind == FeedbackKind::AckEcn);

    if (scout()) {
        switch (fb.kind) {
        case FeedbackKind::AckClean:
            if (buffer_.size() < params_.buffer_size && std::find(buffer_.begin(), buffer_.end(), i) == buffer_.end())
                buffer_.insert(std::upper_bound(buffer_.begin(), buffer_.end(), i), i);
            break;
        case FeedbackKind::AckEcn:
            if (++ecn_counts_[i] > params_.ecn_threshold) {
                ecn_counts_[i] = 0;
                remove_from_buffer(i);
            }
            break;
        case FeedbackKind::Nack:
            ecn_counts_[i] = 0;
            remove_from_buffer(i);
            break;
        case FeedbackKind::Timeout:
            ecn_counts_[i] = 0;
            remove_from_buffer(i);
            weights_.block(i, fb.now);
            break;
        }
    } else {
        if (fb.kind == FeedbackKind::AckClean && buffer_.size() < params_.buffer_size)
            buffer_.push_back(i);
        if (fb.kind == FeedbackKind::Timeout)
            weights_.block(i, fb.now);
    }
    assert(buffer_.size() <= params_.buffer_size);
}

OpsBalancer::OpsBalancer(bool weighted, const EVList &paths, const SpritzParams &params, uint64_t seed)
    : weighted_(weighted), count_(static_cast<uint32_t>(paths.size())), rng_(seed) {
    if (paths.empty())
        throw NoViablePath("empty path list");
    if (weighted)
        weights_ = init_weights(paths.latencies_ns, params.w_scale);
    else
        weights_.assign(paths.size(), 1.0);
    sampler_.assign(weights_);
}

uint32_t OpsBalancer::select(SimTime) {
    if (!weighted_)
        return static_cast<uint32_t>(uniform_index(rng_, count_));
    return sampler_.sample(rng_);
}

uint64_t five_tuple_hash(const FiveTuple &t) {
    uint64_t h = splitmix64((uint64_t(t.src) << 32) | t.dst);
    h = splitmix64(h ^ ((uint64_t(t.sport) << 24) | (uint64_t(t.dport) << 8) | t.proto));
    return h;
}

EcmpBalancer::EcmpBalancer(const EVList &paths, const FiveTuple &tuple) {
    if (paths.empty())
        throw NoViablePath("empty path list");
    index_ = static_cast<uint32_t>(five_tuple_hash(tuple) % paths.size());
}

FlicrBalancer::FlicrBalancer(const EVList &paths, const SpritzParams &spritz, const FlicrParams &params,
                             uint64_t seed)
    : paths_(paths), params_(params), weights_(paths, false, spritz), rng_(seed) {}

void FlicrBalancer::repath(SimTime now) {
    const uint32_t previous = current_;
    if (started_ && paths_.size() > 1) {
        // Draw among the other paths: the current one just triggered the change.
        std::vector<double> w = weights_.weights(now);
        w[previous] = 0.0;
        WeightedSampler s;
        s.assign(w);
        current_ = s.total() > 0.0 ? s.sample(rng_) : weights_.sample(rng_, now);
    } else {
        current_ = weights_.sample(rng_, now);
    }
    if (started_ && current_ != previous)
        ++repaths_;
    started_ = true;
    congested_ = false;
    recent_.clear();
}

uint32_t FlicrBalancer::select(SimTime now) {
    if (!started_ || now - last_send_ > params_.flowlet_gap || congested_)
        repath(now);
    last_send_ = now;
    return current_;
}

void FlicrBalancer::feedback(const Feedback &fb) {
    if (fb.index != current_)
        return;
    switch (fb.kind) {
    case FeedbackKind::AckClean:
    case FeedbackKind::AckEcn:
        recent_.push_back(fb.kind == FeedbackKind::AckEcn);
        if (recent_.size() > params_.ecn_window)
            recent_.pop_front();
        if (recent_.size() == params_.ecn_window &&
            double(std::count(recent_.begin(), recent_.end(), 1)) / double(recent_.size()) > params_.ecn_fraction)
            congested_ = true;
        break;
    case FeedbackKind::Nack:
        congested_ = true;
        break;
    case FeedbackKind::Timeout:
        weights_.block(fb.index, fb.now);
        congested_ = true;
        break;
    }
}

std::unique_ptr<LoadBalancer> make_load_balancer(Scheme scheme, const BalancerContext &ctx) {
    if (switch_routed(scheme))
        return nullptr;
    if (!ctx.paths || ctx.paths->empty())
        throw NoViablePath("no paths to balance over");
    switch (scheme) {
    case Scheme::Ecmp:
        return std::make_unique<EcmpBalancer>(*ctx.paths, ctx.tuple);
    case Scheme::Flicr:
        return std::make_unique<FlicrBalancer>(*ctx.paths, ctx.spritz, ctx.flicr, ctx.seed);
    case Scheme::OpsU:
    case Scheme::OpsW:
        return std::make_unique<OpsBalancer>(scheme == Scheme::OpsW, *ctx.paths, ctx.spritz, ctx.seed);
    case Scheme::Scout:
    case Scheme::SprayU:
    case Scheme::SprayW:
        return std::make_unique<SpritzBalancer>(scheme, *ctx.paths, ctx.spritz, ctx.seed);
    default:
        return nullptr;
    }
}

} // namespace spritz
