// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/metrics.hpp"

#include "spritz/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace spritz {

namespace {

constexpr std::pair<FlowTag, const char *> kTagNames[] = {
    {FlowTag::Foreground, "foreground"}, {FlowTag::Background, "background"}, {FlowTag::Bystander, "bystander"},
    {FlowTag::Incast, "incast"},         {FlowTag::Monitored, "monitored"},
};

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

nlohmann::json stats_json(const FctStats &s) {
    return {{"flows", s.flows},   {"completed", s.completed}, {"mean_us", s.mean_us},
            {"p50_us", s.p50_us}, {"p99_us", s.p99_us},       {"max_us", s.max_us}};
}

void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out)
        throw Error("failed writing " + path.string());
}

} // namespace

const char *to_string(FlowTag t) {
    for (const auto &[tag, name] : kTagNames)
        if (tag == t)
            return name;
    return "?";
}

std::optional<FlowTag> parse_flow_tag(const std::string &s) {
    for (const auto &[tag, name] : kTagNames)
        if (s == name)
            return tag;
    return std::nullopt;
}

double percentile(std::vector<double> samples, double p) {
    if (samples.empty())
        throw EmptySamples("percentile of an empty sample set");
    if (!(p >= 0.0 && p <= 100.0))
        throw InvalidParameter("percentile rank must lie in [0, 100]");
    std::sort(samples.begin(), samples.end());
    const double rank = std::ceil(p / 100.0 * double(samples.size()));
    const size_t index = rank < 1.0 ? 0 : static_cast<size_t>(rank) - 1;
    return samples[std::min(index, samples.size() - 1)];
}

FctStats fct_stats(const std::vector<FlowRecord> &flows, std::optional<FlowTag> tag) {
    FctStats s;
    std::vector<double> fcts;
    for (const auto &f : flows) {
        if (tag && f.tag != *tag)
            continue;
        ++s.flows;
        if (f.completed)
            fcts.push_back(to_us(f.fct()));
    }
    s.completed = fcts.size();
    if (fcts.empty())
        return s;
    double sum = 0;
    for (double v : fcts)
        sum += v;
    s.mean_us = sum / double(fcts.size());
    s.p50_us = percentile(fcts, 50);
    s.p99_us = percentile(fcts, 99);
    s.max_us = *std::max_element(fcts.begin(), fcts.end());
    return s;
}

nlohmann::json summary_json(const RunResult &run, const nlohmann::json &config, uint64_t seed) {
    using nlohmann::json;
    const Counters &c = run.counters;
    uint64_t ooo = 0, received = 0, retransmissions = 0, timeouts = 0, nacks = 0, completed = 0;
    for (const auto &f : run.flows) {
        ooo += f.ooo;
        received += f.received;
        retransmissions += f.retransmissions;
        timeouts += f.timeouts;
        nacks += f.nacks;
        completed += f.completed ? 1 : 0;
    }
    json by_tag = json::object();
    for (const auto &[tag, name] : kTagNames) {
        const FctStats s = fct_stats(run.flows, tag);
        if (s.flows > 0)
            by_tag[name] = stats_json(s);
    }
    char fp[32];
    std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(run.topology_fingerprint));
    return json{
        {"schema_version", kSummarySchemaVersion},
        {"seed", seed},
        {"topology_fingerprint", fp},
        {"config", config},
        {"completed", run.completed},
        {"wall_clock_expired", run.wall_clock_expired},
        {"end_time_ns", to_ns(run.end_time)},
        {"flows", {{"total", run.flows.size()}, {"completed", completed}}},
        {"fct", stats_json(fct_stats(run.flows))},
        {"fct_by_tag", by_tag},
        {"drops",
         {{"queue_drop", c.queue_drops},
          {"trim", c.trims},
          {"failed_link", c.failed_link_drops},
          {"total", c.total_drops()},
          {"lost", c.lost_packets()}}},
        {"packets",
         {{"injected", c.injected},
          {"delivered", c.delivered},
          {"delivered_trimmed", c.delivered_trimmed},
          {"retransmissions", retransmissions},
          {"nacks", nacks},
          {"timeouts", timeouts},
          {"ecn_marks", c.ecn_marks},
          {"stale_feedback", c.stale_feedback},
          {"control_packets", c.control_packets}}},
        {"ooo", {{"packets", ooo}, {"received", received}, {"percent", received ? 100.0 * ooo / received : 0.0}}},
        {"control_overhead", c.data_bytes ? double(c.control_bytes) / double(c.data_bytes) : 0.0},
        {"events", c.events},
    };
}

const std::vector<std::string> &flow_csv_columns() {
    static const std::vector<std::string> cols = {
        "flow_id",   "tag",      "scheme",          "src",         "dst",         "bytes",
        "start_ns",  "end_ns",   "fct_ns",          "completed",   "packets",     "injected",
        "retransmissions", "received", "ooo",       "acks",        "ecn_acks",    "nacks",
        "timeouts",  "trimmed",  "queue_drops",     "failed_link_drops", "in_network"};
    return cols;
}

std::string flows_csv(const std::vector<FlowRecord> &flows) {
    std::ostringstream os;
    const auto &cols = flow_csv_columns();
    for (size_t i = 0; i < cols.size(); ++i)
        os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto &f : flows) {
        os << f.id << ',' << to_string(f.tag) << ',' << f.scheme << ',' << f.src << ',' << f.dst << ',' << f.bytes
           << ',' << fixed(to_ns(f.start), 3) << ',' << (f.completed ? fixed(to_ns(f.end), 3) : "") << ','
           << (f.completed ? fixed(to_ns(f.fct()), 3) : "") << ',' << (f.completed ? 1 : 0) << ',' << f.packets
           << ',' << f.injected << ',' << f.retransmissions << ',' << f.received << ',' << f.ooo << ',' << f.acks
           << ',' << f.ecn_acks << ',' << f.nacks << ',' << f.timeouts << ',' << f.trimmed << ',' << f.queue_drops
           << ',' << f.failed_link_drops << ',' << f.in_network << '\n';
    }
    return os.str();
}

void export_run(const std::string &dir, const RunResult &run, const nlohmann::json &config, uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error("cannot create " + dir + ": " + ec.message());
    const std::filesystem::path base(dir);
    write_file(base / "flows.csv", flows_csv(run.flows));
    write_file(base / "summary.json", summary_json(run, config, seed).dump(2) + "\n");
}

std::string format_report(const nlohmann::json &s) {
    std::ostringstream os;
    auto num = [](const nlohmann::json &v) { return v.is_number() ? v.get<double>() : 0.0; };
    const auto &cfg = s.value("config", nlohmann::json::object());
    os << "scheme      " << cfg.value("scheme", std::string("?")) << '\n';
    os << "seed        " << s.value("seed", 0) << '\n';
    os << "completed   " << (s.value("completed", false) ? "yes" : "no") << "  (" << s["flows"].value("completed", 0)
       << "/" << s["flows"].value("total", 0) << " flows)\n";
    os << "end time    " << fixed(num(s["end_time_ns"]) / 1000.0, 3) << " us\n\n";
    os << "tag          flows   mean_us    p50_us    p99_us    max_us\n";
    auto row = [&](const std::string &name, const nlohmann::json &st) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-11s %6lld %9.2f %9.2f %9.2f %9.2f\n", name.c_str(),
                      static_cast<long long>(st.value("completed", 0)), num(st["mean_us"]), num(st["p50_us"]),
                      num(st["p99_us"]), num(st["max_us"]));
        os << buf;
    };
    row("all", s["fct"]);
    for (const auto &[name, st] : s["fct_by_tag"].items())
        row(name, st);
    const auto &d = s["drops"];
    os << "\ndrops       queue " << d.value("queue_drop", 0) << ", trim " << d.value("trim", 0) << ", failed link "
       << d.value("failed_link", 0) << '\n';
    os << "ooo         " << fixed(num(s["ooo"]["percent"]), 3) << " %\n";
    return os.str();
}

} // namespace spritz
