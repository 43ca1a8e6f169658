#include "rnnorbit/rnnorbit.h"

#include <string>
#include <utility>

#include "rnnorbit/pipeline.hpp"

namespace {

thread_local std::string g_last_error = "no error";

int map_error(const std::exception& e, int fallback = RO_ERR_USAGE) {
    g_last_error = e.what();
    if (dynamic_cast<const rnnorbit::TrainingError*>(&e)) return RO_ERR_NUMERIC;
    return fallback;
}

}  // namespace

struct ro_model {
    rnnorbit::Checkpoint checkpoint;
    rnnorbit::Vocabulary vocab;
    std::string arch;
};

extern "C" {

const char* ro_version(void) { return "0.1.0"; }

const char* ro_last_error(void) { return g_last_error.c_str(); }

int ro_train(const char* config_path, const char* out_dir) {
    if (!config_path || !out_dir) {
        g_last_error = "ro_train: NULL argument";
        return RO_ERR_USAGE;
    }
    try {
        rnnorbit::run_train(config_path, out_dir);
        return RO_OK;
    } catch (const std::exception& e) {
        return map_error(e);
    }
}

ro_model* ro_model_open(const char* checkpoint_path, const char* vocab_path) {
    if (!checkpoint_path || !vocab_path) {
        g_last_error = "ro_model_open: NULL argument";
        return nullptr;
    }
    try {
        auto [ckpt, vocab] = rnnorbit::load_model_checked(checkpoint_path, vocab_path);
        auto* m = new ro_model{std::move(ckpt), std::move(vocab), ""};
        m->arch = rnnorbit::arch_name(m->checkpoint.config.arch);
        return m;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

void ro_model_close(ro_model* model) { delete model; }

int ro_model_get_info(const ro_model* model, ro_model_info* out) {
    if (!model || !out) {
        g_last_error = "ro_model_get_info: NULL argument";
        return RO_ERR_USAGE;
    }
    out->arch = model->arch.c_str();
    out->epoch = model->checkpoint.epoch;
    out->hidden_size = model->checkpoint.config.hidden;
    out->embed_size = model->checkpoint.config.embed;
    out->vocab_size = model->checkpoint.params.vocab;
    out->val_perplexity = model->checkpoint.val_perplexity;
    return RO_OK;
}

int ro_analyze(ro_model* model, const ro_analyze_opts* opts, const char* out_csv,
               const char* dump_dir) {
    if (!model || !opts || !opts->mode || !out_csv) {
        g_last_error = "ro_analyze: NULL argument";
        return RO_ERR_USAGE;
    }
    try {
        rnnorbit::AnalyzeOptions a;
        a.mode = rnnorbit::mode_from_name(opts->mode);
        a.detect_budget = opts->detect_steps ? opts->detect_steps : 20000;
        a.verify_budget = opts->verify_steps ? opts->verify_steps : 40000;
        a.count = opts->count;
        a.seed = opts->seed;
        a.workers = opts->workers ? opts->workers : 1;
        a.dump_trajectories = opts->dump_trajectories;
        a.init_mean = opts->init_mean;
        a.init_std = opts->init_std > 0.0 ? opts->init_std : 1.0;
        rnnorbit::run_analyze(model->checkpoint, model->vocab, a, out_csv,
                              dump_dir ? dump_dir : "");
        return RO_OK;
    } catch (const std::exception& e) {
        return map_error(e);
    }
}

int ro_report(const char* const* verdict_paths, size_t n_verdicts,
              const char* const* dump_paths, size_t n_dumps, const char* out_dir) {
    if (!out_dir || (n_verdicts && !verdict_paths) || (n_dumps && !dump_paths)) {
        g_last_error = "ro_report: NULL argument";
        return RO_ERR_USAGE;
    }
    try {
        std::vector<std::string> verdicts(verdict_paths, verdict_paths + n_verdicts);
        std::vector<std::string> dumps(dump_paths, dump_paths + n_dumps);
        rnnorbit::run_report(verdicts, dumps, out_dir);
        return RO_OK;
    } catch (const std::exception& e) {
        return map_error(e);
    }
}

}  // extern "C"
