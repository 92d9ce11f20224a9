// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cmath>
#include <cstdint>

namespace spritz {

// Simulated time in picoseconds; 4160 B at 400 Gb/s is exactly 83200 ps.
using SimTime = int64_t;

inline constexpr SimTime kPicosPerNano = 1000;
inline constexpr SimTime kNever = INT64_MAX;

inline constexpr SimTime from_ns(double ns) { return static_cast<SimTime>(ns * 1000.0 + (ns >= 0 ? 0.5 : -0.5)); }
inline constexpr double to_ns(SimTime t) { return double(t) / 1000.0; }
inline constexpr double to_us(SimTime t) { return double(t) / 1e6; }

// Wire time of `bytes` on a link of `gbps`.
inline SimTime serialization_time(uint32_t bytes, double gbps) { return std::llround(bytes * 8.0 * 1000.0 / gbps); }

} // namespace spritz
