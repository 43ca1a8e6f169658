#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rnnorbit/cells.hpp"
#include "rnnorbit/corpus.hpp"

namespace rnnorbit {

struct TrainConfig {
    Arch arch = Arch::Vanilla;
    std::size_t hidden = 300;
    std::size_t embed = 500;
    double learning_rate = 0.001;
    std::size_t window = 35;   // truncated BPTT length
    std::size_t batch = 20;
    std::size_t max_epochs = 40;
    std::vector<std::size_t> checkpoint_epochs = {0, 10, 20, 30, 40};
    std::uint64_t seed = 0;
    double grad_clip = 5.0;    // global-norm clip; <= 0 disables

    void validate() const;
    std::string echo() const;  // key = value snapshot stored in checkpoints
};

struct Checkpoint {
    TrainConfig config;
    std::size_t epoch = 0;
    ModelParams params;
    std::uint64_t vocab_hash = 0;
    double val_perplexity = 0.0;
};

// Versioned binary checkpoint: magic "ORBS", format version, config
// echo, fixed header fields, then each tensor as (name length, name,
// rows, cols, little-endian f64 data). Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// Adam with bias correction; per-tensor first/second moment state keyed
// by tensor name. beta1 0.9, beta2 0.999, eps 1e-8.
struct AdamState {
    std::map<std::string, std::vector<double>> m, v;
    std::uint64_t step = 0;
};

void adam_update(ModelParams& params, Gradients& grads, AdamState& state, double lr);

// exp(mean NLL) under teacher forcing, hidden state carried across the
// segment from zeros. Throws ParamError on an empty segment.
double perplexity(const ModelParams& params, std::span<const int> segment);

struct EpochInfo {
    std::size_t epoch;
    double train_loss;      // mean over windows this epoch (NaN for epoch 0)
    double val_perplexity;
    bool is_best;
};

using EpochCallback = std::function<void(const EpochInfo&)>;
using CheckpointSink = std::function<void(const Checkpoint&)>;

struct TrainResult {
    std::vector<Checkpoint> checkpoints;
    std::size_t best_epoch = 0;
    double best_val_perplexity = 0.0;
};

// Full training run. Epoch 0 is the untrained initialization; early
// stopping is tracked (best epoch retained) but checkpoints keep being
// emitted through max_epochs. Throws TrainingError naming the step if
// the loss goes non-finite.
TrainResult train(const TrainConfig& cfg, const TokenStream& stream,
                  std::uint64_t vocab_hash, std::size_t vocab_size,
                  const CheckpointSink& sink = nullptr,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace rnnorbit
