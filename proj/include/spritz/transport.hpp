// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/sim_time.hpp"

#include <cstdint>
#include <vector>

namespace spritz {

struct TransportParams {
    uint32_t header_bytes = 64;
    uint32_t payload_bytes = 4096;
    double dctcp_gain = 1.0 / 16.0;
    uint32_t fast_increase_threshold = 5; // consecutive unmarked ACKs
    double quick_adapt_threshold = 0.5;   // NACKed fraction of a window
    double cwnd_bdp_multiplier = 1.5;
    uint32_t bdp_packets = 0;             // 0: port queue capacity
    SimTime rto = 0;                      // 0: derived from the longest path
    double rto_multiplier = 10.0;
    uint32_t rto_backoff_cap = 16;
    bool trimming = true;

    uint32_t mss() const { return header_bytes + payload_bytes; }
};

// DCTCP window with per-ACK alpha updates, FastIncrease and QuickAdapt.
// All sizes are bytes; one MSS is a full 4160 B packet.
class CongestionControl {
  public:
    CongestionControl(uint64_t cwnd_max, uint32_t mss, const TransportParams &params);

    void on_ack(bool ecn_marked, uint32_t bytes);
    // Returns true when QuickAdapt shrank the window.
    bool on_nack(uint32_t bytes);

    uint64_t cwnd() const { return cwnd_; }
    uint64_t cwnd_max() const { return cwnd_max_; }
    double alpha() const { return alpha_; }
    uint64_t quick_adapts() const { return quick_adapts_; }
    uint64_t fast_increases() const { return fast_increases_; }

  private:
    void end_window();
    void clamp();

    uint64_t cwnd_;
    uint64_t cwnd_max_;
    uint32_t mss_;
    TransportParams params_;
    double alpha_ = 0.0;
    uint32_t clean_streak_ = 0;
    // Current observation window: one cwnd worth of feedback.
    uint64_t window_bytes_ = 0;
    uint64_t window_acked_ = 0;
    uint32_t window_packets_ = 0;
    uint32_t window_nacks_ = 0;
    bool window_marked_ = false;
    uint64_t quick_adapts_ = 0;
    uint64_t fast_increases_ = 0;
};

// Receiver-side sequence tracking. A packet is out of order iff its PSN
// differs from the expected one; the expectation then moves past it.
class ReceiverState {
  public:
    explicit ReceiverState(uint32_t packets = 0) : seen_(packets, 0) {}

    // True if the PSN was new; duplicates only produce another ACK.
    bool on_data(uint32_t psn, uint32_t payload);

    uint32_t expected() const { return expected_; }
    uint64_t ooo() const { return ooo_; }
    uint64_t received() const { return received_; }
    uint64_t unique() const { return unique_; }
    uint64_t delivered_bytes() const { return delivered_bytes_; }
    uint64_t duplicates() const { return received_ - unique_; }

  private:
    std::vector<uint8_t> seen_;
    uint32_t expected_ = 0;
    uint64_t ooo_ = 0;
    uint64_t received_ = 0;
    uint64_t unique_ = 0;
    uint64_t delivered_bytes_ = 0;
};

// Per-PSN retransmission timer with exponential backoff.
inline SimTime backoff_rto(SimTime base, uint32_t consecutive_timeouts, uint32_t cap) {
    uint64_t factor = 1;
    for (uint32_t i = 0; i < consecutive_timeouts && factor < cap; ++i)
        factor *= 2;
    if (factor > cap)
        factor = cap;
    return base * static_cast<SimTime>(factor);
}

} // namespace spritz
