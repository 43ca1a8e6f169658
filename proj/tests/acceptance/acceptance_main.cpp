// Acceptance gate: nine checks covering gradient correctness, the period
// detector, pipeline determinism, and a desk-scale end-to-end run that
// trains both architectures on a bundled deterministic corpus and
// reproduces the qualitative claims (periodic closed-loop orbits, sink
// behaviour without input, period growth with training, LSTM advantage).
//
// Prints one line per criterion; exits non-zero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rnnorbit/pipeline.hpp"
#include "support/fd_check.hpp"
#include "support/textgen.hpp"

using namespace rnnorbit;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances and scales ----
constexpr double kGradEps = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr std::size_t kGradSamplesPerTensor = 20;

constexpr std::size_t kPlantedStreams = 1000;
constexpr std::size_t kMaxPlantedPeriod = 50;
constexpr std::size_t kMaxTransient = 500;
constexpr std::size_t kLogisticStreams = 100;
constexpr std::size_t kLogisticDetect = 20000;

constexpr double kClusterTol = 1e-6;

constexpr std::size_t kSinkTrajectories = 1000;   // per architecture
constexpr double kSinkPeriodOnePct = 99.0;        // criterion 6 threshold
constexpr double kSinkMonotonePct = 95.0;         // criterion 9 threshold

constexpr std::size_t kDeskCorpusWords = 30000;
constexpr std::size_t kDeskHidden = 64;
constexpr std::size_t kDeskEmbed = 256;
constexpr std::size_t kDeskEpochs = 40;
constexpr std::size_t kDeskMidEpoch = 20;
constexpr std::size_t kWithInputConditions = 100;  // per checkpoint
constexpr std::size_t kDetect = 10000;      // feedback orbits can be long
constexpr std::size_t kVerify = 20000;
constexpr std::size_t kSinkDetect = 4000;   // zero-input orbits settle fast
constexpr std::size_t kSinkVerify = 8000;

struct Criterion {
    bool pass = false;
    std::string detail;
};

std::vector<OrbitVerdict> g_periodic_verdicts;  // pooled for criterion 3

void note_verdict(const OrbitVerdict& v) {
    if (v.periodic) g_periodic_verdicts.push_back(v);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------- criterion 1: gradient suite ----------

Criterion check_gradient_suite() {
    Criterion c;
    std::size_t failures = 0;
    std::ostringstream worst;
    for (const Arch arch : {Arch::Vanilla, Arch::Lstm}) {
        const std::size_t hidden = 4, embed = 3, vocab = 5, steps = 4, batch = 2;
        Rng init_rng(arch == Arch::Vanilla ? 101 : 202);
        ModelParams m = init_model(arch, hidden, embed, vocab, init_rng);

        Rng data_rng(7);
        std::vector<std::vector<int>> inputs(steps, std::vector<int>(batch));
        std::vector<std::vector<int>> targets(steps, std::vector<int>(batch));
        for (auto& row : inputs)
            for (auto& t : row) t = static_cast<int>(data_rng.next_u64() % vocab);
        for (auto& row : targets)
            for (auto& t : row) t = static_cast<int>(data_rng.next_u64() % vocab);

        Rng coord_rng(13);
        const auto fails = test_support::check_gradients(
            m, inputs, targets, coord_rng, kGradSamplesPerTensor, kGradEps, kGradRelTol);
        failures += fails.size();
        for (const auto& f : fails)
            worst << " [" << arch_name(arch) << ":" << f.tensor << "#" << f.index
                  << " rel=" << f.rel_error << "]";
    }
    c.pass = failures == 0;
    std::ostringstream d;
    d << "analytic vs central-difference gradients (eps=" << kGradEps
      << ", rel tol " << kGradRelTol << ", " << kGradSamplesPerTensor
      << " coords/tensor, both architectures): " << failures << " mismatches"
      << worst.str();
    c.detail = d.str();
    return c;
}

// ---------- criterion 2: period-detector oracle ----------

// A cycle whose minimal period is exactly its length: reject any proper
// divisor that also reproduces the infinite repetition.
std::vector<int> make_minimal_cycle(Rng& rng, std::size_t period) {
    for (;;) {
        std::vector<int> cycle(period);
        for (auto& t : cycle) t = static_cast<int>(rng.next_u64() % 10);
        bool minimal = true;
        for (std::size_t d = 1; d < period; ++d) {
            if (period % d != 0) continue;
            bool matches = true;
            for (std::size_t i = 0; i < period && matches; ++i)
                if (cycle[i] != cycle[(i + d) % period]) matches = false;
            if (matches) {
                minimal = false;
                break;
            }
        }
        if (minimal) return cycle;
    }
}

Criterion check_detector_oracle() {
    Criterion c;
    Rng rng(0xbeef);
    std::size_t planted_ok = 0;
    for (std::size_t s = 0; s < kPlantedStreams; ++s) {
        const std::size_t period = 1 + rng.next_u64() % kMaxPlantedPeriod;
        const std::size_t transient = rng.next_u64() % (kMaxTransient + 1);
        const std::vector<int> cycle = make_minimal_cycle(rng, period);
        std::size_t t = 0;
        auto gen = [&]() {
            const std::size_t step = t++;
            // Transient tokens live outside the cycle alphabet, so they
            // can never extend a match into the transient.
            if (step < transient) return static_cast<int>(100 + step);
            return cycle[(step - transient) % period];
        };
        const OrbitVerdict v = detect_period(gen, 2000, 4000);
        note_verdict(v);
        if (v.periodic && v.period == period) ++planted_ok;
    }

    std::size_t logistic_ok = 0;
    for (std::size_t s = 0; s < kLogisticStreams; ++s) {
        double x = 0.05 + 0.9 * rng.uniform();
        auto gen = [&]() {
            x = 4.0 * x * (1.0 - x);
            return std::min(15, static_cast<int>(x * 16.0));
        };
        const OrbitVerdict v = detect_period(gen, kLogisticDetect, 2 * kLogisticDetect);
        note_verdict(v);
        if (!v.periodic) ++logistic_ok;
    }

    c.pass = planted_ok == kPlantedStreams && logistic_ok == kLogisticStreams;
    std::ostringstream d;
    d << "planted periods 1-" << kMaxPlantedPeriod << " with transients <= "
      << kMaxTransient << ": " << planted_ok << "/" << kPlantedStreams
      << " recovered exactly; quantized logistic-map (r=4) streams: " << logistic_ok
      << "/" << kLogisticStreams << " non-periodic";
    c.detail = d.str();
    return c;
}

// ---------- criterion 3: minimality (pooled verdicts) ----------

Criterion check_minimality() {
    Criterion c;
    std::size_t violations = 0;
    for (const OrbitVerdict& v : g_periodic_verdicts) {
        for (std::size_t j = 1; j < v.period; ++j) {
            bool matches = true;
            for (std::size_t i = 0; i < v.period && matches; ++i)
                if (v.cycle[i] != v.cycle[(i + j) % v.period]) matches = false;
            if (matches) {
                ++violations;
                break;
            }
        }
    }
    c.pass = violations == 0;
    std::ostringstream d;
    d << "brute-force smaller-period scan over " << g_periodic_verdicts.size()
      << " periodic verdicts from the whole suite: " << violations << " violations";
    c.detail = d.str();
    return c;
}

// ---------- criterion 4: byte-identical replay ----------

std::string write_replay_config(const fs::path& dir) {
    write_file((dir / "corpus.txt").string(), test_support::generate_corpus(21, 5000));
    KeyValueFile cfg;
    cfg.set("corpus", (dir / "corpus.txt").string());
    cfg.set("arch", "lstm");
    cfg.set("hidden_size", "10");
    cfg.set("embed_size", "8");
    cfg.set("window", "10");
    cfg.set("batch_size", "4");
    cfg.set("max_epochs", "2");
    cfg.set("checkpoint_epochs", "0,2");
    cfg.set("seed", "17");
    cfg.set("min_count", "1");
    const std::string p = (dir / "config.txt").string();
    write_file(p, cfg.serialize());
    return p;
}

std::vector<std::string> replay_once(const fs::path& dir, const std::string& config) {
    const std::string run = (dir / "run").string();
    std::vector<std::string> artifacts = run_train(config, run, false);
    artifacts.push_back(run + "/vocab.txt");

    const auto [ckpt, vocab] = load_model_checked(run + "/lstm_epoch2.ckpt",
                                                  run + "/vocab.txt");
    AnalyzeOptions wi;
    wi.mode = MapMode::WithInput;
    wi.detect_budget = 500;
    wi.verify_budget = 1000;
    wi.count = 8;
    wi.dump_trajectories = 2;
    run_analyze(ckpt, vocab, wi, run + "/wi.csv", run + "/dumps");
    AnalyzeOptions wo = wi;
    wo.mode = MapMode::WithoutInput;
    wo.count = 8;
    wo.seed = 4;
    wo.dump_trajectories = 0;
    run_analyze(ckpt, vocab, wo, run + "/wo.csv");
    artifacts.push_back(run + "/wi.csv");
    artifacts.push_back(run + "/wo.csv");
    artifacts.push_back(run + "/dumps/lstm_with-input_epoch2_cond0.traj");
    artifacts.push_back(run + "/dumps/lstm_with-input_epoch2_cond1.traj");

    const std::vector<std::string> written =
        run_report({run + "/wi.csv", run + "/wo.csv"},
                   {run + "/dumps/lstm_with-input_epoch2_cond0.traj",
                    run + "/dumps/lstm_with-input_epoch2_cond1.traj"},
                   run + "/report");
    for (const std::string& w : written) artifacts.push_back(w);
    return artifacts;
}

Criterion check_replay(const fs::path& work) {
    Criterion c;
    const fs::path a = work / "replay_a";
    const fs::path b = work / "replay_b";
    fs::create_directories(a);
    fs::create_directories(b);
    const std::string cfg_a = write_replay_config(a);
    const std::string cfg_b = write_replay_config(b);

    const std::vector<std::string> fa = replay_once(a, cfg_a);
    const std::vector<std::string> fb = replay_once(b, cfg_b);

    std::size_t mismatches = 0;
    std::size_t compared = 0;
    std::string first_diff;
    for (std::size_t i = 0; i < fa.size() && i < fb.size(); ++i) {
        ++compared;
        if (read_file(fa[i]) != read_file(fb[i])) {
            ++mismatches;
            if (first_diff.empty()) first_diff = fs::path(fa[i]).filename().string();
        }
    }
    c.pass = mismatches == 0 && fa.size() == fb.size();
    std::ostringstream d;
    d << "seeded pipeline replay (checkpoints, vocabulary, verdicts, trajectory dumps, "
         "tables, plots): "
      << compared << " artifacts compared, " << mismatches << " byte differences";
    if (!first_diff.empty()) d << " (first: " << first_diff << ")";
    c.detail = d.str();
    return c;
}

// ---------- desk-scale run shared by criteria 5-9 ----------

struct DeskModel {
    std::string arch;
    std::map<std::size_t, Checkpoint> checkpoints;  // epoch -> checkpoint
    Vocabulary vocab;
};

DeskModel train_desk(const fs::path& work, const std::string& arch,
                     const std::string& corpus_path) {
    KeyValueFile cfg;
    cfg.set("corpus", corpus_path);
    cfg.set("arch", arch);
    cfg.set("hidden_size", std::to_string(kDeskHidden));
    cfg.set("embed_size", std::to_string(kDeskEmbed));
    cfg.set("max_epochs", std::to_string(kDeskEpochs));
    cfg.set("checkpoint_epochs", "0," + std::to_string(kDeskMidEpoch) + "," +
                                     std::to_string(kDeskEpochs));
    cfg.set("seed", "12");
    cfg.set("min_count", "2");
    const std::string cfg_path = (work / (arch + "_config.txt")).string();
    write_file(cfg_path, cfg.serialize());

    const std::string run = (work / (arch + "_run")).string();
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::string> ckpts = run_train(cfg_path, run, false);
    std::cerr << "[desk] trained " << arch << " in " << elapsed_s(t0) << "s\n";

    DeskModel dm;
    dm.arch = arch;
    for (const std::string& p : ckpts) {
        auto [c, v] = load_model_checked(p, run + "/vocab.txt");
        dm.vocab = std::move(v);
        dm.checkpoints.emplace(c.epoch, std::move(c));
    }
    return dm;
}

struct SinkRun {
    PeriodStats stats;
    std::size_t sink_count = 0;      // Periodic{1} trajectories
    std::size_t monotone_count = 0;  // of those, non-increasing distance to sink
};

SinkRun run_sink_trajectories(const DeskModel& dm) {
    const Checkpoint& final_ckpt = dm.checkpoints.at(kDeskEpochs);
    OrbitConfig cfg;
    cfg.mode = MapMode::WithoutInput;
    cfg.detect_budget = kSinkDetect;
    cfg.verify_budget = kSinkVerify;

    Rng rng(2024);
    const std::vector<InitialCondition> conditions =
        sample_initial_conditions(MapMode::WithoutInput, dm.vocab.size(), rng,
                                  kSinkTrajectories);

    SinkRun out;
    std::vector<OrbitVerdict> verdicts;
    verdicts.reserve(conditions.size());
    for (const InitialCondition& ic : conditions) {
        TrajectoryResult r = run_trajectory(final_ckpt.params, ic, cfg);
        note_verdict(r.verdict);
        if (r.verdict.periodic && r.verdict.period == 1) {
            ++out.sink_count;
            if (classify_sink(r.trajectory).monotone) ++out.monotone_count;
        }
        verdicts.push_back(std::move(r.verdict));
    }
    out.stats = aggregate(verdicts);
    out.stats.arch = dm.arch;
    out.stats.epoch = kDeskEpochs;
    out.stats.mode = MapMode::WithoutInput;
    return out;
}

struct WithInputRun {
    std::map<std::size_t, PeriodStats> stats_by_epoch;
    // Epoch-kDeskEpochs trajectories that were rendered, with verdicts.
    std::vector<std::pair<Trajectory, OrbitVerdict>> plotted;
};

WithInputRun run_with_input(const DeskModel& dm, const fs::path& plot_dir) {
    WithInputRun out;
    OrbitConfig cfg;
    cfg.mode = MapMode::WithInput;
    cfg.detect_budget = kDetect;
    cfg.verify_budget = kVerify;

    Rng rng(0);
    const std::vector<InitialCondition> conditions = sample_initial_conditions(
        MapMode::WithInput, dm.vocab.size(), rng, kWithInputConditions);

    for (const auto& [epoch, ckpt] : dm.checkpoints) {
        std::vector<OrbitVerdict> verdicts;
        verdicts.reserve(conditions.size());
        for (std::size_t i = 0; i < conditions.size(); ++i) {
            TrajectoryResult r = run_trajectory(ckpt.params, conditions[i], cfg);
            note_verdict(r.verdict);
            if (epoch == kDeskEpochs && out.plotted.size() < 10 && r.verdict.periodic &&
                r.verdict.period > 1) {
                const std::string svg_path =
                    (plot_dir / (dm.arch + "_orbit_" + std::to_string(i) + ".svg"))
                        .string();
                write_file(svg_path, render_orbit_plot(r.trajectory, r.verdict));
                out.plotted.emplace_back(std::move(r.trajectory), r.verdict);
            }
            verdicts.push_back(std::move(r.verdict));
        }
        PeriodStats s = aggregate(verdicts);
        s.arch = dm.arch;
        s.epoch = epoch;
        s.mode = MapMode::WithInput;
        out.stats_by_epoch.emplace(epoch, std::move(s));
    }
    return out;
}

// ---------- criterion 5: cluster structure of plotted orbits ----------

Criterion check_clusters(const std::vector<const WithInputRun*>& runs) {
    Criterion c;
    std::size_t checked = 0, bad = 0;
    std::ostringstream diffs;
    for (const WithInputRun* run : runs) {
        for (const auto& [traj, verdict] : run->plotted) {
            if (!verdict.periodic || verdict.period <= 1) continue;
            ++checked;
            const std::size_t clusters =
                count_state_clusters(traj.post_burn_in_states(), kClusterTol);
            if (clusters != verdict.period) {
                ++bad;
                diffs << " [period " << verdict.period << " -> " << clusters
                      << " clusters]";
            }
        }
    }
    c.pass = bad == 0;
    std::ostringstream d;
    d << "plotted closed-loop orbits with period k > 1: " << checked
      << " checked, hidden states form exactly k clusters at tol " << kClusterTol
      << " in all but " << bad << diffs.str();
    c.detail = d.str();
    return c;
}

// ---------- criteria 6-9 over the desk-scale results ----------

Criterion check_sink_table(const SinkRun& vanilla, const SinkRun& lstm) {
    Criterion c;
    auto pct_one = [](const SinkRun& r) {
        return 100.0 * static_cast<double>(r.stats.period_one_count) /
               static_cast<double>(r.stats.trajectory_count);
    };
    const double v1 = pct_one(vanilla), l1 = pct_one(lstm);
    c.pass = v1 >= kSinkPeriodOnePct && l1 >= kSinkPeriodOnePct &&
             vanilla.stats.percent_non_periodic == 0.0 &&
             lstm.stats.percent_non_periodic == 0.0;
    std::ostringstream d;
    d << "zero-input trajectories from Gaussian starts (n=" << kSinkTrajectories
      << " per arch): period-1 " << v1 << "% vanilla / " << l1
      << "% lstm (threshold >= " << kSinkPeriodOnePct << "%), non-periodic "
      << vanilla.stats.percent_non_periodic << "% / " << lstm.stats.percent_non_periodic
      << "% (must be 0)";
    c.detail = d.str();
    return c;
}

Criterion check_period_growth(const WithInputRun& vanilla, const WithInputRun& lstm) {
    Criterion c;
    std::ostringstream d;
    bool all_periodic = true;
    for (const auto* run : {&vanilla, &lstm})
        for (const auto& [epoch, s] : run->stats_by_epoch)
            if (s.percent_non_periodic != 0.0) all_periodic = false;

    const double v0 = vanilla.stats_by_epoch.at(0).average_period;
    const double vT = vanilla.stats_by_epoch.at(kDeskEpochs).average_period;
    const double l0 = lstm.stats_by_epoch.at(0).average_period;
    const double lT = lstm.stats_by_epoch.at(kDeskEpochs).average_period;
    const bool growth = vT > v0 && lT > l0;
    const bool lstm_longer = lT > vT;

    c.pass = all_periodic && growth && lstm_longer;
    d << "feedback orbits (" << kWithInputConditions << " seed words/checkpoint): "
      << "(a) all periodic within budgets: " << (all_periodic ? "yes" : "NO")
      << "; (b) average period grows with training: vanilla " << v0 << "->" << vT
      << ", lstm " << l0 << "->" << lT << (growth ? "" : " (NO GROWTH)")
      << "; (c) trained lstm period exceeds vanilla: " << lT
      << (lstm_longer ? " > " : " <= ") << vT;
    c.detail = d.str();
    return c;
}

Criterion check_perplexity(const DeskModel& vanilla, const DeskModel& lstm) {
    Criterion c;
    const double v = vanilla.checkpoints.at(kDeskEpochs).val_perplexity;
    const double l = lstm.checkpoints.at(kDeskEpochs).val_perplexity;
    c.pass = l < v;
    std::ostringstream d;
    d << "validation perplexity at the final checkpoint: lstm " << l
      << (c.pass ? " < " : " >= ") << "vanilla " << v;
    c.detail = d.str();
    return c;
}

Criterion check_monotone_sinks(const SinkRun& vanilla, const SinkRun& lstm) {
    Criterion c;
    const std::size_t sinks = vanilla.sink_count + lstm.sink_count;
    const std::size_t mono = vanilla.monotone_count + lstm.monotone_count;
    const double pct = sinks ? 100.0 * static_cast<double>(mono) /
                                   static_cast<double>(sinks)
                             : 0.0;
    c.pass = sinks > 0 && pct >= kSinkMonotonePct;
    std::ostringstream d;
    d << "distance-to-sink is non-increasing after burn-in for " << mono << "/" << sinks
      << " sink trajectories (" << pct << "%, threshold >= " << kSinkMonotonePct << "%)";
    c.detail = d.str();
    return c;
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "rnnorbit_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    std::vector<Criterion> results(9);

    const auto t_start = std::chrono::steady_clock::now();
    results[0] = check_gradient_suite();
    results[1] = check_detector_oracle();
    results[3] = check_replay(work);

    // Desk-scale end-to-end runs shared by criteria 5-9.
    const std::string corpus_path = (work / "novel.txt").string();
    write_file(corpus_path, test_support::generate_corpus(11, kDeskCorpusWords));
    const DeskModel vanilla = train_desk(work, "vanilla", corpus_path);
    const DeskModel lstm = train_desk(work, "lstm", corpus_path);

    const fs::path plots = work / "plots";
    fs::create_directories(plots);
    auto t0 = std::chrono::steady_clock::now();
    const WithInputRun wi_vanilla = run_with_input(vanilla, plots);
    const WithInputRun wi_lstm = run_with_input(lstm, plots);
    std::cerr << "[desk] with-input analysis in " << elapsed_s(t0) << "s\n";
    t0 = std::chrono::steady_clock::now();
    const SinkRun sink_vanilla = run_sink_trajectories(vanilla);
    const SinkRun sink_lstm = run_sink_trajectories(lstm);
    std::cerr << "[desk] without-input analysis in " << elapsed_s(t0) << "s\n";

    results[4] = check_clusters({&wi_vanilla, &wi_lstm});
    results[5] = check_sink_table(sink_vanilla, sink_lstm);
    results[6] = check_period_growth(wi_vanilla, wi_lstm);
    results[7] = check_perplexity(vanilla, lstm);
    results[8] = check_monotone_sinks(sink_vanilla, sink_lstm);
    results[2] = check_minimality();  // pools verdicts from everything above

    bool all_pass = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const Criterion& c = results[i];
        all_pass = all_pass && c.pass;
        std::cout << "criterion " << (i + 1) << ": " << (c.pass ? "PASS" : "FAIL")
                  << " - " << c.detail << "\n";
    }
    std::cout << (all_pass ? "ACCEPTANCE: all criteria passed" : "ACCEPTANCE: FAILURES")
              << " (total " << elapsed_s(t_start) << "s)\n";
    fs::remove_all(work);
    return all_pass ? 0 : 1;
}
