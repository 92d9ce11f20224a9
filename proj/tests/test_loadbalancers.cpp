// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/errors.hpp"
#include "spritz/loadbalancers.hpp"
#include "spritz/paths.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace spritz;

namespace {

// Hand-built path list; index 0 is the shortest. The first `minimal` paths
// are minimal-category.
EVList make_list(std::vector<double> latencies, size_t minimal = 1) {
    EVList l;
    for (size_t i = 0; i < latencies.size(); ++i) {
        l.entries.push_back({static_cast<uint8_t>(i), 0, 0});
        l.latencies_ns.push_back(latencies[i]);
        PathType t;
        t.local_hops = 1;
        t.global_hops = 1;
        t.category = i < minimal ? PathCategory::MinimalAcrossGroups : PathCategory::NonMinimal;
        l.types.push_back(t);
        l.paths.push_back({0, static_cast<SwitchId>(i + 1), 100});
    }
    return l;
}

SpritzParams params() { return SpritzParams{}; }

} // namespace

TEST(Schemes, NamesRoundTrip) {
    EXPECT_EQ(all_schemes().size(), 10u);
    std::set<std::string> names;
    for (Scheme s : all_schemes()) {
        names.insert(to_string(s));
        EXPECT_EQ(parse_scheme(to_string(s)), s);
    }
    EXPECT_EQ(names.size(), 10u);
    EXPECT_FALSE(parse_scheme("spray"));
    EXPECT_TRUE(switch_routed(Scheme::Minimal));
    EXPECT_TRUE(switch_routed(Scheme::Valiant));
    EXPECT_TRUE(switch_routed(Scheme::UgalL));
    EXPECT_FALSE(switch_routed(Scheme::Scout));
    EXPECT_FALSE(switch_routed(Scheme::Ecmp));
}

TEST(WeightedSampler, ZeroTotalThrows) {
    WeightedSampler s;
    s.assign({0.0, 0.0});
    Rng rng(1);
    EXPECT_THROW(s.sample(rng), NoViablePath);
}

TEST(WeightedSampler, FrequenciesFollowWeights) {
    WeightedSampler s;
    const std::vector<double> w = {1.0, 0.0, 3.0, 0.0, 4.0};
    s.assign(w);
    Rng rng(7);
    std::vector<int> hits(w.size(), 0);
    const int n = 80000;
    for (int i = 0; i < n; ++i)
        ++hits[s.sample(rng)];
    EXPECT_EQ(hits[1], 0);
    EXPECT_EQ(hits[3], 0);
    EXPECT_NEAR(hits[0] / double(n), 1.0 / 8, 0.01);
    EXPECT_NEAR(hits[2] / double(n), 3.0 / 8, 0.01);
    EXPECT_NEAR(hits[4] / double(n), 4.0 / 8, 0.01);
}

TEST(PathWeights, BaseMatchesEquationWeights) {
    const EVList l = make_list({799.6, 1491.0}, 1);
    PathWeights w(l, false, params());
    const auto expected = init_weights(l.latencies_ns, params().w_scale);
    EXPECT_EQ(w.base(), expected);
    PathWeights u(l, true, params());
    EXPECT_EQ(u.base(), (std::vector<double>{1.0, 1.0}));
    EXPECT_THROW(PathWeights(EVList{}, false, params()), NoViablePath);
}

TEST(PathWeights, BlockingZeroesUntilInterval) {
    const EVList l = make_list({700, 900, 1100});
    SpritzParams p = params();
    p.block_interval = 1000;
    PathWeights w(l, true, p);
    w.block(1, 500);
    EXPECT_TRUE(w.blocked(1));
    EXPECT_EQ(w.weights(600)[1], 0.0);
    EXPECT_EQ(w.weights(1499)[1], 0.0);
    EXPECT_EQ(w.weights(1500)[1], 1.0);
    EXPECT_FALSE(w.blocked(1));
    Rng rng(3);
    w.block(0, 2000);
    for (int i = 0; i < 1000; ++i)
        EXPECT_NE(w.sample(rng, 2100), 0u);
}

TEST(PathWeights, AllBlockedFallsBackToUniform) {
    const EVList l = make_list({700, 900});
    PathWeights w(l, false, params());
    w.block(0, 0);
    w.block(1, 0);
    Rng rng(5);
    std::set<uint32_t> seen;
    for (int i = 0; i < 200; ++i)
        seen.insert(w.sample(rng, 10));
    EXPECT_EQ(seen, (std::set<uint32_t>{0, 1}));
}

TEST(PathWeights, EcnRateBiasesMinimalPaths) {
    const EVList l = make_list({700, 900, 1100}, 2);
    SpritzParams p = params();
    p.ecn_rate_window = 10;
    p.ecn_rate_trigger = 0.5;
    p.min_bias_factor = 8.0;
    PathWeights w(l, true, p);
    // The rate is undefined until the window has filled.
    for (int i = 0; i < 9; ++i)
        w.record_ack(true);
    EXPECT_EQ(w.ecn_rate(), 0.0);
    EXPECT_FALSE(w.biased());
    w.record_ack(true);
    EXPECT_DOUBLE_EQ(w.ecn_rate(), 1.0);
    EXPECT_TRUE(w.biased());
    EXPECT_EQ(w.weights(0), (std::vector<double>{8.0, 8.0, 1.0}));
    for (int i = 0; i < 5; ++i)
        w.record_ack(false);
    EXPECT_DOUBLE_EQ(w.ecn_rate(), 0.5);
    EXPECT_FALSE(w.biased());
    EXPECT_EQ(w.weights(0), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(PathWeights, IndexZeroBiasVariant) {
    const EVList l = make_list({700, 900, 1100}, 2);
    SpritzParams p = params();
    p.ecn_rate_window = 2;
    p.ecn_rate_trigger = 0.5;
    p.min_bias_factor = 5.0;
    p.min_bias_index0_only = true;
    PathWeights w(l, true, p);
    w.record_ack(true);
    w.record_ack(true);
    EXPECT_EQ(w.weights(0), (std::vector<double>{5.0, 1.0, 1.0}));
}

TEST(Spray, ReusesAckedPathsInFifoOrder) {
    const EVList l = make_list({700, 800, 900, 1000, 1100});
    SpritzBalancer b(Scheme::SprayW, l, params(), 1);
    b.feedback({FeedbackKind::AckClean, 3, 0});
    b.feedback({FeedbackKind::AckClean, 1, 0});
    b.feedback({FeedbackKind::AckClean, 3, 0});
    EXPECT_EQ(b.buffer(), (std::deque<uint32_t>{3, 1, 3}));
    EXPECT_EQ(b.select(0), 3u);
    EXPECT_EQ(b.select(0), 1u);
    EXPECT_EQ(b.select(0), 3u);
    EXPECT_TRUE(b.buffer().empty());
}

TEST(Spray, EcnAndNackDoNotRefillBuffer) {
    const EVList l = make_list({700, 800});
    SpritzBalancer b(Scheme::SprayU, l, params(), 1);
    b.feedback({FeedbackKind::AckEcn, 0, 0});
    b.feedback({FeedbackKind::Nack, 1, 0});
    EXPECT_TRUE(b.buffer().empty());
}

TEST(Spray, BufferIsBounded) {
    const EVList l = make_list({700, 800});
    SpritzParams p = params();
    p.buffer_size = 4;
    SpritzBalancer b(Scheme::SprayW, l, p, 1);
    for (int i = 0; i < 20; ++i)
        b.feedback({FeedbackKind::AckClean, uint32_t(i % 2), 0});
    EXPECT_EQ(b.buffer().size(), 4u);
}

TEST(Spray, ExplorationEveryThresholdPlusOne) {
    const EVList l = make_list({700, 800, 900});
    SpritzParams p = params();
    p.explore_threshold = 4;
    SpritzBalancer b(Scheme::SprayW, l, p, 1);
    for (int i = 0; i < 50; ++i) {
        b.feedback({FeedbackKind::AckClean, 2, 0});
        b.select(0);
    }
    EXPECT_EQ(b.explorations(), 50u / 5u);
}

TEST(Spray, TimeoutBlocksPath) {
    const EVList l = make_list({700, 800});
    SpritzBalancer b(Scheme::SprayW, l, params(), 9);
    b.feedback({FeedbackKind::Timeout, 0, 100});
    EXPECT_TRUE(b.weights().blocked(0));
    for (int i = 0; i < 40; ++i)
        EXPECT_EQ(b.select(200), 1u);
}

TEST(Scout, KeepsSortedSetAndDoesNotConsume) {
    const EVList l = make_list({700, 800, 900, 1000, 1100});
    SpritzBalancer b(Scheme::Scout, l, params(), 1);
    b.feedback({FeedbackKind::AckClean, 3, 0});
    b.feedback({FeedbackKind::AckClean, 1, 0});
    b.feedback({FeedbackKind::AckClean, 3, 0});
    b.feedback({FeedbackKind::AckClean, 4, 0});
    EXPECT_EQ(b.buffer(), (std::deque<uint32_t>{1, 3, 4}));
    EXPECT_EQ(b.select(0), 1u);
    EXPECT_EQ(b.select(0), 1u);
    EXPECT_EQ(b.buffer().size(), 3u);
}

TEST(Scout, EcnThresholdEvicts) {
    const EVList l = make_list({700, 800});
    SpritzParams p = params();
    p.ecn_threshold = 3;
    SpritzBalancer b(Scheme::Scout, l, p, 1);
    b.feedback({FeedbackKind::AckClean, 0, 0});
    for (int i = 0; i < 3; ++i)
        b.feedback({FeedbackKind::AckEcn, 0, 0});
    EXPECT_EQ(b.buffer().size(), 1u);
    EXPECT_EQ(b.ecn_counts()[0], 3u);
    b.feedback({FeedbackKind::AckEcn, 0, 0});
    EXPECT_TRUE(b.buffer().empty());
    EXPECT_EQ(b.ecn_counts()[0], 0u);
}

TEST(Scout, NackEvictsAndTimeoutBlocks) {
    const EVList l = make_list({700, 800, 900});
    SpritzBalancer b(Scheme::Scout, l, params(), 1);
    b.feedback({FeedbackKind::AckClean, 0, 0});
    b.feedback({FeedbackKind::AckClean, 1, 0});
    b.feedback({FeedbackKind::Nack, 0, 0});
    EXPECT_EQ(b.buffer(), (std::deque<uint32_t>{1}));
    b.feedback({FeedbackKind::Timeout, 1, 50});
    EXPECT_TRUE(b.buffer().empty());
    EXPECT_TRUE(b.weights().blocked(1));
}

TEST(Scout, BufferIsBounded) {
    std::vector<double> lat;
    for (int i = 0; i < 20; ++i)
        lat.push_back(700 + 10 * i);
    const EVList l = make_list(lat);
    SpritzBalancer b(Scheme::Scout, l, params(), 1);
    for (uint32_t i = 0; i < 20; ++i)
        b.feedback({FeedbackKind::AckClean, i, 0});
    EXPECT_EQ(b.buffer().size(), params().buffer_size);
}

TEST(SpritzBalancer, RejectsOtherSchemes) {
    const EVList l = make_list({700});
    EXPECT_THROW(SpritzBalancer(Scheme::OpsU, l, params(), 1), InvalidParameter);
}

TEST(Ops, UniformIgnoresFeedback) {
    const EVList l = make_list({700, 800, 900, 1000});
    OpsBalancer b(false, l, params(), 11);
    std::vector<int> hits(4, 0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        b.feedback({FeedbackKind::Timeout, 0, 0});
        ++hits[b.select(0)];
    }
    for (int h : hits)
        EXPECT_NEAR(h / double(n), 0.25, 0.01);
}

TEST(Ops, WeightedPrefersShortPaths) {
    const EVList l = make_list({799.6, 1491.0});
    OpsBalancer b(true, l, params(), 11);
    const auto w = init_weights(l.latencies_ns, params().w_scale);
    int first = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i)
        first += b.select(0) == 0;
    EXPECT_NEAR(first / double(n), w[0] / (w[0] + w[1]), 0.01);
}

TEST(Ecmp, HashIsStablePerFlow) {
    const EVList l = make_list({700, 800, 900, 1000, 1100, 1200, 1300, 1400});
    std::map<uint32_t, int> spread;
    for (uint16_t port = 0; port < 400; ++port) {
        FiveTuple t{1, 2, port, 0, 17};
        EcmpBalancer a(l, t), b(l, t);
        const uint32_t i = a.select(0);
        EXPECT_EQ(i, b.select(123));
        EXPECT_EQ(i, five_tuple_hash(t) % l.size());
        ++spread[i];
    }
    EXPECT_EQ(spread.size(), l.size());
}

TEST(Flicr, StaysWithinFlowletAndMovesAfterGap) {
    const EVList l = make_list({700, 800, 900, 1000});
    FlicrParams fp;
    fp.flowlet_gap = 1000;
    FlicrBalancer b(l, params(), fp, 3);
    const uint32_t first = b.select(0);
    for (SimTime t = 100; t < 5000; t += 100)
        EXPECT_EQ(b.select(t), first);
    EXPECT_EQ(b.repaths(), 0u);
    // After a gap the flowlet restarts; the draw may land on any path.
    b.select(20000);
    EXPECT_LE(b.repaths(), 1u);
}

TEST(Flicr, NackForcesDifferentPath) {
    const EVList l = make_list({700, 800, 900, 1000});
    FlicrParams fp;
    fp.flowlet_gap = 1'000'000;
    FlicrBalancer b(l, params(), fp, 3);
    for (int k = 0; k < 20; ++k) {
        const uint32_t cur = b.select(k * 10);
        b.feedback({FeedbackKind::Nack, cur, k * 10 + 1});
        EXPECT_NE(b.select(k * 10 + 2), cur);
    }
    EXPECT_EQ(b.repaths(), 20u);
}

TEST(Flicr, EcnMajorityTriggersRepath) {
    const EVList l = make_list({700, 800});
    FlicrParams fp;
    fp.flowlet_gap = 1'000'000;
    fp.ecn_window = 4;
    fp.ecn_fraction = 0.5;
    FlicrBalancer b(l, params(), fp, 3);
    const uint32_t cur = b.select(0);
    b.feedback({FeedbackKind::AckEcn, cur, 1});
    b.feedback({FeedbackKind::AckEcn, cur, 1});
    b.feedback({FeedbackKind::AckClean, cur, 1});
    b.feedback({FeedbackKind::AckClean, cur, 1});
    EXPECT_EQ(b.select(2), cur);
    // Window of the last four is now clean, clean, marked, marked: still 50%.
    b.feedback({FeedbackKind::AckEcn, cur, 3});
    b.feedback({FeedbackKind::AckEcn, cur, 3});
    EXPECT_EQ(b.select(3), cur);
    b.feedback({FeedbackKind::AckEcn, cur, 3});
    EXPECT_NE(b.select(4), cur);
    // Feedback for a path no longer in use is ignored.
    const uint32_t now_on = b.current();
    b.feedback({FeedbackKind::Nack, 1 - now_on, 5});
    EXPECT_EQ(b.select(6), now_on);
}

TEST(Factory, BuildsEveryHostScheme) {
    const EVList l = make_list({700, 800});
    BalancerContext ctx;
    ctx.paths = &l;
    for (Scheme s : all_schemes()) {
        auto lb = make_load_balancer(s, ctx);
        if (switch_routed(s)) {
            EXPECT_EQ(lb, nullptr);
        } else {
            ASSERT_NE(lb, nullptr);
            EXPECT_EQ(lb->scheme(), s);
        }
    }
    BalancerContext empty;
    EXPECT_THROW(make_load_balancer(Scheme::SprayW, empty), NoViablePath);
}
