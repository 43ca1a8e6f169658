#include "rnnorbit/orbit.hpp"

#include <algorithm>
#include <cmath>

namespace rnnorbit {

std::string mode_name(MapMode m) {
    return m == MapMode::WithInput ? "with-input" : "without-input";
}

MapMode mode_from_name(const std::string& name) {
    if (name == "with-input") return MapMode::WithInput;
    if (name == "without-input") return MapMode::WithoutInput;
    throw ParamError("unknown mode: " + name + " (expected with-input|without-input)");
}

std::pair<CellState, int> closed_loop_step(const ModelParams& m, const CellState& s,
                                           MapMode mode) {
    if (mode == MapMode::WithInput) {
        const Vector logits = predict_logits(m.out, s.h);
        const int token = static_cast<int>(argmax(logits));
        const double* row = m.embedding.table.row(static_cast<std::size_t>(token));
        Vector x(row, row + m.embed);
        CellState next = m.arch == Arch::Vanilla ? vanilla_step(m.vanilla, s, x)
                                                 : lstm_step(m.lstm, s, x);
        return {std::move(next), token};
    }
    const Vector zero(m.embed, 0.0);
    CellState next = m.arch == Arch::Vanilla ? vanilla_step(m.vanilla, s, zero)
                                             : lstm_step(m.lstm, s, zero);
    const int token = static_cast<int>(argmax(predict_logits(m.out, next.h)));
    return {std::move(next), token};
}

std::vector<InitialCondition> sample_initial_conditions(MapMode mode,
                                                        std::size_t vocab_size,
                                                        Rng& rng, std::size_t count) {
    std::vector<InitialCondition> out;
    if (mode == MapMode::WithInput) {
        if (vocab_size == 0) throw ParamError("sample_initial_conditions: empty vocabulary");
        std::size_t n = (count == 0 || count >= vocab_size) ? vocab_size : count;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            InitialCondition ic;
            // Evenly spaced over the id range when subsampling.
            ic.word_id = static_cast<int>(i * vocab_size / n);
            out.push_back(ic);
        }
    } else {
        if (count == 0) throw ParamError("sample_initial_conditions: count must be >= 1");
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            InitialCondition ic;
            ic.h0_seed = rng.next_u64();
            out.push_back(ic);
        }
    }
    return out;
}

OrbitVerdict detect_period(const std::function<int()>& next_token,
                           std::size_t detect_budget, std::size_t verify_budget) {
    if (detect_budget < 100) throw ParamError("detect_period: detect budget < 100");

    std::vector<int> y(detect_budget);
    for (std::size_t t = 0; t < detect_budget; ++t) y[t] = next_token();

    const std::size_t burn_in = detect_budget / 2;
    const std::size_t cap = detect_budget / 10;

    OrbitVerdict v;
    std::size_t period = 0;
    for (std::size_t k = 1; k <= cap; ++k) {
        const std::size_t window = std::max(std::size_t{10} * k, std::size_t{200});
        if (window > detect_budget - burn_in) break;  // window would reach into the transient
        bool ok = true;
        for (std::size_t t = detect_budget - window; t + k < detect_budget; ++t)
            if (y[t + k] != y[t]) {
                ok = false;
                break;
            }
        if (ok) {
            period = k;
            break;
        }
    }

    if (period == 0) {
        v.steps_examined = detect_budget;
        return v;
    }

    std::vector<int> cycle(y.end() - static_cast<std::ptrdiff_t>(period), y.end());
    for (std::size_t t = 0; t < verify_budget; ++t) {
        if (next_token() != cycle[t % period]) {
            v.steps_examined = detect_budget + t + 1;
            return v;
        }
    }

    const std::size_t reps = verify_budget / period;
    v.steps_examined = detect_budget + verify_budget;
    if (reps < 10) return v;  // cannot confirm enough repetitions
    v.periodic = true;
    v.period = period;
    v.cycle = std::move(cycle);
    v.detect_step = detect_budget;
    v.verified_reps = reps;
    return v;
}

namespace {

// Stride-16 history plus a dense ring over the last `dense_cap` steps.
class Recorder {
public:
    explicit Recorder(std::size_t dense_cap) : cap_(dense_cap) {}

    void record(std::size_t step, const Vector& h) {
        dense_.emplace_back(step, h);
        if (dense_.size() > cap_) {
            auto& front = dense_.front();
            if (front.first % 16 == 0) sparse_.push_back(std::move(front));
            dense_.pop_front();
        }
    }

    std::vector<std::pair<std::size_t, Vector>> take() {
        std::vector<std::pair<std::size_t, Vector>> out;
        out.reserve(sparse_.size() + dense_.size());
        for (auto& p : sparse_) out.push_back(std::move(p));
        for (auto& p : dense_) out.push_back(std::move(p));
        return out;
    }

private:
    std::size_t cap_;
    std::vector<std::pair<std::size_t, Vector>> sparse_;
    std::deque<std::pair<std::size_t, Vector>> dense_;
};

}  // namespace

std::vector<Vector> Trajectory::post_burn_in_states() const {
    std::vector<Vector> out;
    for (const auto& [step, h] : states)
        if (step >= burn_in) out.push_back(h);
    return out;
}

TrajectoryResult run_trajectory(const ModelParams& m, const InitialCondition& ic,
                                const OrbitConfig& cfg) {
    TrajectoryResult res;
    Trajectory& traj = res.trajectory;
    traj.mode = cfg.mode;
    traj.ic = ic;
    traj.burn_in = cfg.detect_budget / 2;

    Recorder rec(cfg.dense_cap);
    CellState state = m.zero_state();
    std::size_t step = 0;

    if (cfg.mode == MapMode::WithInput) {
        if (ic.word_id < 0 || static_cast<std::size_t>(ic.word_id) >= m.vocab)
            throw ParamError("run_trajectory: seed word out of range");
        // h1 = one step from zero state with the seed word embedded.
        const double* row = m.embedding.table.row(static_cast<std::size_t>(ic.word_id));
        Vector x(row, row + m.embed);
        state = m.arch == Arch::Vanilla ? vanilla_step(m.vanilla, state, x)
                                        : lstm_step(m.lstm, state, x);
    } else {
        Rng rng(ic.h0_seed);
        state.h = sample_gaussian(rng, m.hidden, cfg.init_mean, cfg.init_std);
        if (m.arch == Arch::Lstm)
            state.c = sample_gaussian(rng, m.hidden, cfg.init_mean, cfg.init_std);
    }
    rec.record(step, state.h);

    traj.tokens.reserve(cfg.detect_budget);
    auto supplier = [&]() {
        auto [next, token] = closed_loop_step(m, state, cfg.mode);
        state = std::move(next);
        ++step;
        rec.record(step, state.h);
        if (traj.tokens.size() < cfg.detect_budget) traj.tokens.push_back(token);
        return token;
    };

    res.verdict = detect_period(supplier, cfg.detect_budget, cfg.verify_budget);
    traj.total_steps = step;
    traj.states = rec.take();
    return res;
}

SinkReport classify_sink(const Trajectory& t) {
    if (t.states.size() < 100)
        throw ParamError("classify_sink: need at least 100 retained states");
    SinkReport r;
    r.final_state = t.states.back().second;
    r.distances.reserve(t.states.size());
    for (const auto& [step, h] : t.states) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) {
            const double diff = h[j] - r.final_state[j];
            d2 += diff * diff;
        }
        r.distances.push_back(std::sqrt(d2));
    }
    r.monotone = true;
    constexpr double kSlack = 1e-9;
    for (std::size_t i = 0; i + 1 < t.states.size(); ++i) {
        if (t.states[i].first < t.burn_in) continue;
        if (r.distances[i + 1] > r.distances[i] + kSlack) {
            r.monotone = false;
            break;
        }
    }
    return r;
}

bool hidden_period_check(const Trajectory& t, std::size_t k, double tol) {
    if (k == 0) throw ParamError("hidden_period_check: period must be >= 1");
    // Index retained post-burn-in states by step.
    std::vector<const std::pair<std::size_t, Vector>*> post;
    for (const auto& p : t.states)
        if (p.first >= t.burn_in) post.push_back(&p);
    if (post.empty() || post.back()->first - post.front()->first < 3 * k)
        throw ParamError("hidden_period_check: retained states span < 3k steps");

    std::size_t compared = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < post.size(); ++i) {
        const std::size_t want = post[i]->first + k;
        while (j < post.size() && post[j]->first < want) ++j;
        if (j == post.size()) break;
        if (post[j]->first != want) continue;
        const Vector& a = post[i]->second;
        const Vector& b = post[j]->second;
        for (std::size_t d = 0; d < a.size(); ++d)
            if (std::abs(a[d] - b[d]) >= tol) return false;
        ++compared;
    }
    if (compared == 0)
        throw ParamError("hidden_period_check: no comparable state pairs at lag k");
    return true;
}

std::size_t count_state_clusters(const std::vector<Vector>& states, double tol) {
    std::vector<std::size_t> reps;  // representative indices
    for (std::size_t i = 0; i < states.size(); ++i) {
        bool found = false;
        for (std::size_t r : reps) {
            double dmax = 0.0;
            for (std::size_t d = 0; d < states[i].size(); ++d)
                dmax = std::max(dmax, std::abs(states[i][d] - states[r][d]));
            if (dmax < tol) {
                found = true;
                break;
            }
        }
        if (!found) reps.push_back(i);
    }
    return reps.size();
}

}  // namespace rnnorbit
