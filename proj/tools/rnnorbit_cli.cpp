// Command-line front end; talks to the core exclusively through the
// rnnorbit C API.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rnnorbit/rnnorbit.h"

namespace {

int fail(int code) {
    std::fprintf(stderr, "error: %s\n", ro_last_error());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rnnorbit: train word-level RNN/LSTM language models and analyze "
                 "them as iterative maps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ro_version()));

    // train
    std::string config_path, out_dir = "run";
    CLI::App* train = app.add_subcommand("train", "train a language model from a config file");
    train->add_option("--config", config_path, "key = value config file")->required();
    train->add_option("--out-dir", out_dir, "output directory (checkpoints, vocab, manifest)");

    // analyze
    std::string ckpt_path, vocab_path, mode = "with-input", analyze_out;
    std::uint64_t detect_steps = 20000, verify_steps = 40000, count = 0, seed = 0;
    std::uint64_t dump_count = 0;
    std::uint64_t workers = std::max(1u, std::thread::hardware_concurrency());
    double init_mean = 0.0, init_std = 1.0;
    CLI::App* analyze = app.add_subcommand("analyze", "run closed-loop trajectories and "
                                                      "detect output periods");
    analyze->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    analyze->add_option("--vocab", vocab_path, "vocabulary file")->required();
    analyze->add_option("--mode", mode, "with-input | without-input");
    analyze->add_option("--detect-steps", detect_steps, "period-detection step budget");
    analyze->add_option("--verify-steps", verify_steps, "verification step budget");
    analyze->add_option("--count", count,
                        "initial conditions (0 = entire vocabulary for with-input)");
    analyze->add_option("--seed", seed, "sampling seed");
    analyze->add_option("--workers", workers, "parallel trajectory workers");
    analyze->add_option("--dump", dump_count, "dump the first N trajectories for plotting");
    analyze->add_option("--init-mean", init_mean, "without-input h0 mean");
    analyze->add_option("--init-std", init_std, "without-input h0 std");
    analyze->add_option("--out-dir", out_dir, "output directory");

    // report
    std::vector<std::string> verdict_files, dump_files;
    CLI::App* report = app.add_subcommand("report", "aggregate verdicts into tables and plots");
    report->add_option("--verdicts", verdict_files, "verdict CSV files");
    report->add_option("--dumps", dump_files, "trajectory dump files");
    report->add_option("--out-dir", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : RO_ERR_USAGE;
    }

    if (*train) {
        const int rc = ro_train(config_path.c_str(), out_dir.c_str());
        return rc == RO_OK ? 0 : fail(rc);
    }

    if (*analyze) {
        ro_model* model = ro_model_open(ckpt_path.c_str(), vocab_path.c_str());
        if (!model) return fail(RO_ERR_USAGE);
        ro_model_info info{};
        ro_model_get_info(model, &info);

        ro_analyze_opts opts{};
        opts.mode = mode.c_str();
        opts.detect_steps = detect_steps;
        opts.verify_steps = verify_steps;
        opts.count = count;
        opts.seed = seed;
        opts.workers = workers;
        opts.dump_trajectories = dump_count;
        opts.init_mean = init_mean;
        opts.init_std = init_std;

        const std::string out_csv = out_dir + "/" + info.arch + "_" + mode + "_epoch" +
                                    std::to_string(info.epoch) + "_verdicts.csv";
        const std::string dump_dir = out_dir + "/dumps";
        // out_dir must exist before the CSV is written; report/train
        // create their own dirs, so do the same here via dump_dir's
        // parent when dumping, or plain mkdir otherwise.
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        const int rc = ro_analyze(model, &opts, out_csv.c_str(),
                                  dump_count ? dump_dir.c_str() : nullptr);
        ro_model_close(model);
        if (rc != RO_OK) return fail(rc);
        std::printf("%s\n", out_csv.c_str());
        return 0;
    }

    // report
    std::vector<const char*> v, d;
    for (const auto& s : verdict_files) v.push_back(s.c_str());
    for (const auto& s : dump_files) d.push_back(s.c_str());
    const int rc = ro_report(v.data(), v.size(), d.data(), d.size(), out_dir.c_str());
    return rc == RO_OK ? 0 : fail(rc);
}
