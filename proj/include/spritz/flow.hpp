// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include "spritz/loadbalancers.hpp"
#include "spritz/metrics.hpp"
#include "spritz/sim_time.hpp"
#include "spritz/topology.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace spritz {

struct FlowSpec {
    EndpointId src = 0;
    EndpointId dst = 0;
    uint64_t bytes = 0;
    SimTime start = 0;
    std::optional<Scheme> scheme; // overrides the run's scheme
    FlowTag tag = FlowTag::Foreground;
    // Indices of flows in the same schedule that must finish first; the flow
    // starts at max(start, last dependency completion).
    std::vector<uint32_t> depends_on;
};

} // namespace spritz
