#pragma once

#include <map>
#include <string>
#include <vector>

#include "rnnorbit/orbit.hpp"

namespace rnnorbit {

struct PeriodStats {
    std::size_t epoch = 0;
    std::string arch;
    MapMode mode = MapMode::WithInput;
    std::size_t trajectory_count = 0;
    std::size_t periodic_count = 0;
    std::size_t period_one_count = 0;
    double average_period = 0.0;       // over periodic orbits only
    double percent_non_periodic = 0.0;
    std::map<std::size_t, std::size_t> histogram;  // period -> count (0 = non-periodic)
};

// Throws ParamError on an empty verdict list.
PeriodStats aggregate(const std::vector<OrbitVerdict>& verdicts);

// Table-1-shaped CSV: one column per epoch, rows (average period,
// full-precision sidecar, non-periodic %) per architecture. All stats
// must share the with-input mode.
std::string render_table(const std::vector<PeriodStats>& stats);

// Table-2-shaped CSV: percentage of trajectories with period 1, > 1, and
// non-periodic, one column per architecture. Without-input stats only.
std::string render_sink_table(const std::vector<PeriodStats>& stats);

// Fixed 600x600 viewport SVG, 10% margins: PCA projection of retained
// hidden states, connected in temporal order. Periodic orbits plot the
// post-burn-in states; sinks (period 1) and non-periodic orbits plot the
// full retained trajectory so the approach is visible.
std::string render_orbit_plot(const Trajectory& trajectory, const OrbitVerdict& verdict);

}  // namespace rnnorbit
