// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/errors.hpp"
#include "spritz/transport.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace spritz;

namespace {

constexpr uint32_t kMss = 4160;

TransportParams tp() { return TransportParams{}; }

} // namespace

TEST(CongestionControl, StartsAtCapAndRejectsTinyCap) {
    CongestionControl cc(10 * kMss, kMss, tp());
    EXPECT_EQ(cc.cwnd(), 10u * kMss);
    EXPECT_EQ(cc.cwnd_max(), 10u * kMss);
    EXPECT_THROW(CongestionControl(kMss - 1, kMss, tp()), InvalidParameter);
    EXPECT_THROW(CongestionControl(kMss, 0, tp()), InvalidParameter);
}

TEST(CongestionControl, AlphaFollowsEwma) {
    CongestionControl cc(100 * kMss, kMss, tp());
    double alpha = 0;
    const double g = tp().dctcp_gain;
    const bool marks[] = {true, true, false, true, false, false, true};
    for (bool m : marks) {
        cc.on_ack(m, kMss);
        alpha = (1 - g) * alpha + g * (m ? 1.0 : 0.0);
        EXPECT_NEAR(cc.alpha(), alpha, 1e-12);
    }
}

TEST(CongestionControl, MarkedWindowShrinksByHalfAlpha) {
    const uint64_t cap = 8 * kMss;
    CongestionControl cc(cap, kMss, tp());
    // One full window of marked ACKs closes the window once.
    double alpha = 0;
    const double g = tp().dctcp_gain;
    for (int i = 0; i < 8; ++i) {
        cc.on_ack(true, kMss);
        alpha = (1 - g) * alpha + g;
    }
    EXPECT_EQ(cc.cwnd(), static_cast<uint64_t>(double(cap) * (1.0 - alpha / 2.0)));
}

TEST(CongestionControl, StaysWithinBounds) {
    const uint64_t cap = 20 * kMss;
    CongestionControl cc(cap, kMss, tp());
    for (int i = 0; i < 5000; ++i) {
        cc.on_ack(true, kMss);
        EXPECT_GE(cc.cwnd(), kMss);
        EXPECT_LE(cc.cwnd(), cap);
    }
    EXPECT_EQ(cc.cwnd(), kMss);
    for (int i = 0; i < 5000; ++i) {
        cc.on_ack(false, kMss);
        EXPECT_LE(cc.cwnd(), cap);
    }
    EXPECT_EQ(cc.cwnd(), cap);
}

TEST(CongestionControl, FastIncreaseAfterCleanStreak) {
    const uint64_t cap = 64 * kMss;
    CongestionControl cc(cap, kMss, tp());
    for (int i = 0; i < 400; ++i)
        cc.on_ack(true, kMss);
    const uint64_t low = cc.cwnd();
    ASSERT_EQ(low, kMss);
    const uint32_t k = tp().fast_increase_threshold;
    for (uint32_t i = 0; i + 1 < k; ++i)
        cc.on_ack(false, kMss);
    EXPECT_EQ(cc.fast_increases(), 0u);
    cc.on_ack(false, kMss);
    EXPECT_EQ(cc.fast_increases(), 1u);
    EXPECT_GT(cc.cwnd(), low);
}

TEST(CongestionControl, QuickAdaptFallsBackToDeliveredBytes) {
    const uint64_t cap = 10 * kMss;
    CongestionControl cc(cap, kMss, tp());
    // Two ACKs, then NACKs until half of the 10-packet window is reported lost.
    cc.on_ack(false, kMss);
    cc.on_ack(false, kMss);
    for (int i = 0; i < 4; ++i)
        EXPECT_FALSE(cc.on_nack(kMss));
    EXPECT_TRUE(cc.on_nack(kMss));
    EXPECT_EQ(cc.quick_adapts(), 1u);
    EXPECT_EQ(cc.cwnd(), 2u * kMss);
}

TEST(CongestionControl, QuickAdaptNeverBelowOnePacket) {
    CongestionControl cc(4 * kMss, kMss, tp());
    cc.on_nack(kMss);
    EXPECT_TRUE(cc.on_nack(kMss));
    EXPECT_EQ(cc.cwnd(), kMss);
}

TEST(Receiver, InOrderHasNoOoo) {
    ReceiverState r(5);
    for (uint32_t i = 0; i < 5; ++i)
        EXPECT_TRUE(r.on_data(i, 4096));
    EXPECT_EQ(r.ooo(), 0u);
    EXPECT_EQ(r.received(), 5u);
    EXPECT_EQ(r.delivered_bytes(), 5u * 4096);
    EXPECT_EQ(r.expected(), 5u);
}

TEST(Receiver, OooCountsPsnMismatches) {
    ReceiverState r(6);
    // Expected moves past each arrival: 0 ok, 2 ooo, 1 ooo, 3 ooo, 4 ok, 5 ok.
    const uint32_t order[] = {0, 2, 1, 3, 4, 5};
    for (uint32_t p : order)
        r.on_data(p, 100);
    EXPECT_EQ(r.ooo(), 3u);
    EXPECT_EQ(r.unique(), 6u);
}

TEST(Receiver, DuplicatesDeliverOnce) {
    ReceiverState r(3);
    EXPECT_TRUE(r.on_data(0, 10));
    EXPECT_FALSE(r.on_data(0, 10));
    EXPECT_TRUE(r.on_data(1, 10));
    EXPECT_EQ(r.delivered_bytes(), 20u);
    EXPECT_EQ(r.duplicates(), 1u);
    EXPECT_EQ(r.received(), 3u);
}

TEST(Receiver, GrowsBeyondInitialSize) {
    ReceiverState r;
    EXPECT_TRUE(r.on_data(10, 1));
    EXPECT_EQ(r.unique(), 1u);
}

TEST(Rto, BackoffDoublesUpToCap) {
    EXPECT_EQ(backoff_rto(100, 0, 16), 100);
    EXPECT_EQ(backoff_rto(100, 1, 16), 200);
    EXPECT_EQ(backoff_rto(100, 3, 16), 800);
    EXPECT_EQ(backoff_rto(100, 4, 16), 1600);
    EXPECT_EQ(backoff_rto(100, 40, 16), 1600);
    EXPECT_EQ(backoff_rto(100, 2, 3), 300);
}
