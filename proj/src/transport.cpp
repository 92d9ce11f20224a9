// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/transport.hpp"

#include "spritz/errors.hpp"

#include <algorithm>

namespace spritz {

CongestionControl::CongestionControl(uint64_t cwnd_max, uint32_t mss, const TransportParams &params)
    : cwnd_(cwnd_max), cwnd_max_(cwnd_max), mss_(mss), params_(params) {
    if (mss == 0 || cwnd_max < mss)
        throw InvalidParameter("congestion window cap must hold at least one packet");
}

void CongestionControl::clamp() { cwnd_ = std::clamp<uint64_t>(cwnd_, mss_, cwnd_max_); }

void CongestionControl::end_window() {
    if (window_marked_)
        cwnd_ = static_cast<uint64_t>(double(cwnd_) * (1.0 - alpha_ / 2.0));
    else
        cwnd_ += mss_;
    clamp();
    window_bytes_ = window_acked_ = 0;
    window_packets_ = window_nacks_ = 0;
    window_marked_ = false;
}

void CongestionControl::on_ack(bool ecn_marked, uint32_t bytes) {
    const double g = params_.dctcp_gain;
    alpha_ = (1.0 - g) * alpha_ + g * (ecn_marked ? 1.0 : 0.0);
    window_bytes_ += bytes;
    window_acked_ += bytes;
    ++window_packets_;
    if (ecn_marked) {
        window_marked_ = true;
        clean_streak_ = 0;
    } else if (++clean_streak_ >= params_.fast_increase_threshold && cwnd_ < cwnd_max_) {
        // FastIncrease: one MSS per clean ACK doubles the window every RTT.
        cwnd_ += mss_;
        ++fast_increases_;
        clamp();
    }
    if (window_bytes_ >= cwnd_)
        end_window();
}

bool CongestionControl::on_nack(uint32_t bytes) {
    clean_streak_ = 0;
    window_bytes_ += bytes;
    ++window_packets_;
    ++window_nacks_;
    const double window_packets = std::max(1.0, double(cwnd_) / double(mss_));
    if (double(window_nacks_) >= params_.quick_adapt_threshold * window_packets) {
        // QuickAdapt: fall back to what the path actually delivered.
        cwnd_ = window_acked_;
        clamp();
        ++quick_adapts_;
        window_bytes_ = window_acked_ = 0;
        window_packets_ = window_nacks_ = 0;
        window_marked_ = false;
        return true;
    }
    if (window_bytes_ >= cwnd_)
        end_window();
    return false;
}

bool ReceiverState::on_data(uint32_t psn, uint32_t payload) {
    ++received_;
    if (psn != expected_)
        ++ooo_;
    expected_ = psn + 1;
    if (psn >= seen_.size())
        seen_.resize(psn + 1, 0);
    if (seen_[psn])
        return false;
    seen_[psn] = 1;
    ++unique_;
    delivered_bytes_ += payload;
    return true;
}

} // namespace spritz
