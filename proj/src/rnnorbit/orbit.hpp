#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "rnnorbit/cells.hpp"

namespace rnnorbit {

// Closed-loop feedback mode: argmax word fed back, or a zero input.
enum class MapMode { WithInput, WithoutInput };

std::string mode_name(MapMode m);
MapMode mode_from_name(const std::string& name);

// One closed-loop iteration.
//   WithInput:  token = argmax logits(h); state' = step(embed(token)).
//   WithoutInput: state' = step(0); token = argmax logits(h') for orbit
//   bookkeeping.
std::pair<CellState, int> closed_loop_step(const ModelParams& m, const CellState& s,
                                           MapMode mode);

struct InitialCondition {
    int word_id = -1;          // WithInput: seed word
    std::uint64_t h0_seed = 0; // WithoutInput: Gaussian draw seed
};

// WithInput: one condition per vocabulary word (or an evenly spaced
// subsample of `count` words when 0 < count < vocab). WithoutInput:
// `count` independently seeded Gaussian draws.
std::vector<InitialCondition> sample_initial_conditions(MapMode mode,
                                                        std::size_t vocab_size,
                                                        Rng& rng, std::size_t count);

struct OrbitVerdict {
    bool periodic = false;
    std::size_t period = 0;
    std::vector<int> cycle;        // length = period
    std::size_t detect_step = 0;   // step at which the candidate was fixed
    std::size_t verified_reps = 0; // full cycle repetitions confirmed
    std::size_t steps_examined = 0;
};

// Finds the smallest k >= 1 whose trailing window of length max(10k,200)
// repeats with lag k (the first half of the detect budget is discarded
// as transient), then replays `verify_budget` further steps against the
// cycle. Periodic only with >= 10 confirmed repetitions; periods above
// detect_budget/10 are never accepted. Throws ParamError if
// detect_budget < 100.
OrbitVerdict detect_period(const std::function<int()>& next_token,
                           std::size_t detect_budget, std::size_t verify_budget);

// Retained hidden states: every step within the dense tail (last
// `dense_cap` steps), stride 16 before that. Bounds memory on long runs
// while keeping the transient visible for sink plots.
struct Trajectory {
    MapMode mode = MapMode::WithInput;
    InitialCondition ic;
    std::size_t total_steps = 0;
    std::size_t burn_in = 0;  // = detect_budget / 2
    std::vector<std::pair<std::size_t, Vector>> states;  // (step, h), step-ordered
    std::vector<int> tokens;  // detect-phase output ids

    // Retained states with step >= burn_in.
    std::vector<Vector> post_burn_in_states() const;
};

struct OrbitConfig {
    MapMode mode = MapMode::WithInput;
    std::size_t detect_budget = 20000;
    std::size_t verify_budget = 40000;
    double init_mean = 0.0;  // WithoutInput h0 (and LSTM c0) distribution
    double init_std = 1.0;
    std::size_t dense_cap = 2000;
};

struct TrajectoryResult {
    Trajectory trajectory;
    OrbitVerdict verdict;
};

// Runs one closed-loop trajectory to a verdict. Deterministic given
// (model, condition, config).
TrajectoryResult run_trajectory(const ModelParams& m, const InitialCondition& ic,
                                const OrbitConfig& cfg);

struct SinkReport {
    Vector final_state;
    std::vector<double> distances;  // per retained state, to the final state
    bool monotone = false;          // non-increasing after burn-in (slack 1e-9)
};

// Requires >= 100 retained states (intended for Periodic{1} candidates).
SinkReport classify_sink(const Trajectory& t);

// True iff ||h_{t+k} - h_t||_inf < tol for every compared pair of
// retained post-burn-in states, i.e. the states cluster into k points.
// Requires retained states spanning >= 3k steps past burn-in.
bool hidden_period_check(const Trajectory& t, std::size_t k, double tol);

// Number of distinct state clusters at the given infinity-norm
// tolerance (used by the plot/cluster acceptance checks).
std::size_t count_state_clusters(const std::vector<Vector>& states, double tol);

}  // namespace rnnorbit
