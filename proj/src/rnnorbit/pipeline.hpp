#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rnnorbit/report.hpp"
#include "rnnorbit/trainer.hpp"

namespace rnnorbit {

// Flat "key = value" config/manifest text, '#' comments.
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text);
    static KeyValueFile load(const std::string& path);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;  // throws ParamError if absent
    std::string get_or(const std::string& key, const std::string& fallback) const;

    void set(const std::string& key, const std::string& value);
    std::string serialize() const;  // insertion order preserved

private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
};

struct RunPaths {
    std::string out_dir;
    std::string vocab_file() const { return out_dir + "/vocab.txt"; }
    std::string manifest_file() const { return out_dir + "/manifest.txt"; }
    std::string checkpoint_file(Arch arch, std::size_t epoch) const;
};

// `train` subcommand: tokenize, build vocab, split, train, write
// checkpoints + vocabulary + manifest. Returns checkpoint paths.
std::vector<std::string> run_train(const std::string& config_path,
                                   const std::string& out_dir,
                                   bool verbose = true);

// Loads a checkpoint and its vocabulary, failing if the vocabulary file
// hash does not match the one recorded at training time.
std::pair<Checkpoint, Vocabulary> load_model_checked(const std::string& checkpoint_path,
                                                     const std::string& vocab_path);

struct AnalyzeOptions {
    MapMode mode = MapMode::WithInput;
    std::size_t detect_budget = 20000;
    std::size_t verify_budget = 40000;
    std::size_t count = 0;  // 0: full vocabulary (with-input) — required > 0 without input
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t dump_trajectories = 0;  // dump the first N trajectories
    double init_mean = 0.0;
    double init_std = 1.0;
};

struct VerdictFile {
    std::string arch;
    std::size_t epoch = 0;
    MapMode mode = MapMode::WithInput;
    std::vector<std::size_t> condition_ids;
    std::vector<OrbitVerdict> verdicts;
};

// `analyze` subcommand: runs every initial condition against a loaded
// checkpoint, fanning trajectories across workers and merging results by
// condition index. Writes the verdict CSV and optional trajectory dumps
// next to it.
VerdictFile run_analyze(const Checkpoint& ckpt, const Vocabulary& vocab,
                        const AnalyzeOptions& opts, const std::string& out_csv,
                        const std::string& dump_dir = "");

// Verdict CSV round-trip ('#' metadata header lines, then
// condition,period,detect_step,verified_reps rows).
void save_verdicts(const std::string& path, const VerdictFile& v);
VerdictFile load_verdicts(const std::string& path);

// Versioned binary trajectory dump ("ORBT") for offline plots.
void save_trajectory(const std::string& path, const Trajectory& t,
                     const OrbitVerdict& v);
std::pair<Trajectory, OrbitVerdict> load_trajectory(const std::string& path);

// `report` subcommand: aggregates verdict files into Table-1/Table-2
// shaped CSVs and renders one SVG per trajectory dump. Returns the list
// of files written.
std::vector<std::string> run_report(const std::vector<std::string>& verdict_paths,
                                    const std::vector<std::string>& dump_paths,
                                    const std::string& out_dir);

}  // namespace rnnorbit
