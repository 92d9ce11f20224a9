// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/sim_time.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spritz {

enum class FlowTag : uint8_t { Foreground, Background, Bystander, Incast, Monitored };

const char *to_string(FlowTag t);
std::optional<FlowTag> parse_flow_tag(const std::string &s);

struct FlowRecord {
    uint32_t id = 0;
    FlowTag tag = FlowTag::Foreground;
    std::string scheme;
    uint32_t src = 0;
    uint32_t dst = 0;
    uint64_t bytes = 0;
    SimTime start = 0;
    SimTime end = 0; // 0 while incomplete
    bool completed = false;
    uint64_t packets = 0;
    uint64_t injected = 0; // data transmissions including retransmissions
    uint64_t retransmissions = 0;
    uint64_t received = 0; // untrimmed data packets seen by the receiver
    uint64_t ooo = 0;
    uint64_t delivered_bytes = 0;
    uint64_t acks = 0;
    uint64_t ecn_acks = 0;
    uint64_t nacks = 0;
    uint64_t timeouts = 0;
    uint64_t trimmed = 0; // trimmed headers that reached the receiver
    uint64_t queue_drops = 0;
    uint64_t failed_link_drops = 0;
    uint64_t in_network = 0; // data packets still travelling when the run stopped

    SimTime fct() const { return completed ? end - start : 0; }
};

struct Counters {
    uint64_t injected = 0;
    uint64_t delivered = 0;
    uint64_t delivered_trimmed = 0;
    uint64_t trims = 0;
    uint64_t queue_drops = 0; // data and control packets refused by a full queue
    uint64_t failed_link_drops = 0;
    uint64_t control_packets = 0;
    uint64_t control_bytes = 0;
    uint64_t data_bytes = 0;
    uint64_t ecn_marks = 0;
    uint64_t stale_feedback = 0;
    uint64_t events = 0;

    uint64_t total_drops() const { return queue_drops + trims + failed_link_drops; }
    // Packets that vanished entirely; trims still notify the sender.
    uint64_t lost_packets() const { return queue_drops + failed_link_drops; }
};

struct RunResult {
    std::vector<FlowRecord> flows;
    Counters counters;
    SimTime end_time = 0;
    bool completed = false;
    bool wall_clock_expired = false;
    uint64_t topology_fingerprint = 0;
};

// Nearest-rank percentile. Throws EmptySamples.
double percentile(std::vector<double> samples, double p);

struct FctStats {
    size_t flows = 0;
    size_t completed = 0;
    double mean_us = 0, p50_us = 0, p99_us = 0, max_us = 0;
};

FctStats fct_stats(const std::vector<FlowRecord> &flows, std::optional<FlowTag> tag = std::nullopt);

inline constexpr int kSummarySchemaVersion = 1;

nlohmann::json summary_json(const RunResult &run, const nlohmann::json &config, uint64_t seed);

// Column order of flows.csv.
const std::vector<std::string> &flow_csv_columns();
std::string flows_csv(const std::vector<FlowRecord> &flows);

// Writes flows.csv and summary.json into `dir` (created if missing).
void export_run(const std::string &dir, const RunResult &run, const nlohmann::json &config, uint64_t seed);

// Fixed-width text table of a summary.json document.
std::string format_report(const nlohmann::json &summary);

} // namespace spritz
