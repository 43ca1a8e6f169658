#include "rnnorbit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rnnorbit {

namespace {

constexpr char kMagic[4] = {'O', 'R', 'B', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void wr(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void wr_u32(std::ostream& out, std::uint32_t v) { wr(out, &v, 4); }
void wr_u64(std::ostream& out, std::uint64_t v) { wr(out, &v, 8); }
void wr_f64(std::ostream& out, double v) { wr(out, &v, 8); }
void wr_str(std::ostream& out, const std::string& s) {
    wr_u32(out, static_cast<std::uint32_t>(s.size()));
    wr(out, s.data(), s.size());
}

void rd(std::istream& in, void* p, std::size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw IoError(std::string("checkpoint: truncated reading ") + what);
}
std::uint32_t rd_u32(std::istream& in, const char* what) {
    std::uint32_t v;
    rd(in, &v, 4, what);
    return v;
}
std::uint64_t rd_u64(std::istream& in, const char* what) {
    std::uint64_t v;
    rd(in, &v, 8, what);
    return v;
}
double rd_f64(std::istream& in, const char* what) {
    double v;
    rd(in, &v, 8, what);
    return v;
}
std::string rd_str(std::istream& in, const char* what) {
    const std::uint32_t n = rd_u32(in, what);
    std::string s(n, '\0');
    rd(in, s.data(), n, what);
    return s;
}

}  // namespace

void TrainConfig::validate() const {
    if (hidden == 0 || embed == 0 || window == 0 || batch == 0)
        throw ParamError("train config: sizes must be positive");
    if (learning_rate <= 0.0) throw ParamError("train config: learning rate must be positive");
    for (std::size_t e : checkpoint_epochs)
        if (e > max_epochs)
            throw ParamError("train config: checkpoint epoch beyond max_epochs");
}

std::string TrainConfig::echo() const {
    std::ostringstream s;
    s << "arch = " << arch_name(arch) << "\n"
      << "hidden_size = " << hidden << "\n"
      << "embed_size = " << embed << "\n"
      << "learning_rate = " << learning_rate << "\n"
      << "window = " << window << "\n"
      << "batch_size = " << batch << "\n"
      << "max_epochs = " << max_epochs << "\n"
      << "grad_clip = " << grad_clip << "\n"
      << "seed = " << seed << "\n"
      << "checkpoint_epochs =";
    for (std::size_t e : checkpoint_epochs) s << " " << e;
    s << "\n";
    return s.str();
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    wr(out, kMagic, 4);
    wr_u32(out, kFormatVersion);
    wr_str(out, c.config.echo());
    wr_u32(out, c.config.arch == Arch::Vanilla ? 0u : 1u);
    wr_u64(out, c.config.hidden);
    wr_u64(out, c.config.embed);
    wr_u64(out, c.params.vocab);
    wr_u64(out, c.epoch);
    wr_u64(out, c.config.seed);
    wr_f64(out, c.config.learning_rate);
    wr_u64(out, c.config.window);
    wr_u64(out, c.config.batch);
    wr_u64(out, c.config.max_epochs);
    wr_f64(out, c.config.grad_clip);
    wr_u64(out, static_cast<std::uint64_t>(c.config.checkpoint_epochs.size()));
    for (std::size_t e : c.config.checkpoint_epochs) wr_u64(out, e);
    wr_u64(out, c.vocab_hash);
    wr_f64(out, c.val_perplexity);

    // Tensor section.
    std::vector<std::tuple<std::string, const double*, std::size_t>> tensors;
    for_each_param(const_cast<ModelParams&>(c.params),
                   [&](const char* name, double* p, std::size_t n) {
                       if (n > 0) tensors.emplace_back(name, p, n);
                   });
    wr_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (auto& [name, p, n] : tensors) {
        wr_str(out, name);
        wr_u64(out, 1);  // stored flat; shapes are implied by the config
        wr_u64(out, n);
        wr(out, p, n * sizeof(double));
    }
    if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    rd(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IngestError("not a checkpoint file: " + path);
    const std::uint32_t version = rd_u32(in, "version");
    if (version != kFormatVersion)
        throw IngestError("unsupported checkpoint version in " + path);

    Checkpoint c;
    (void)rd_str(in, "config echo");
    const std::uint32_t arch = rd_u32(in, "arch");
    c.config.arch = arch == 0 ? Arch::Vanilla : Arch::Lstm;
    c.config.hidden = rd_u64(in, "hidden");
    c.config.embed = rd_u64(in, "embed");
    const std::uint64_t vocab = rd_u64(in, "vocab");
    c.epoch = rd_u64(in, "epoch");
    c.config.seed = rd_u64(in, "seed");
    c.config.learning_rate = rd_f64(in, "learning rate");
    c.config.window = rd_u64(in, "window");
    c.config.batch = rd_u64(in, "batch");
    c.config.max_epochs = rd_u64(in, "max epochs");
    c.config.grad_clip = rd_f64(in, "grad clip");
    const std::uint64_t n_ck = rd_u64(in, "checkpoint epoch count");
    c.config.checkpoint_epochs.clear();
    for (std::uint64_t i = 0; i < n_ck; ++i)
        c.config.checkpoint_epochs.push_back(rd_u64(in, "checkpoint epoch"));
    c.vocab_hash = rd_u64(in, "vocab hash");
    c.val_perplexity = rd_f64(in, "val perplexity");

    c.params = alloc_model(c.config.arch, c.config.hidden, c.config.embed, vocab);
    std::vector<std::tuple<std::string, double*, std::size_t>> tensors;
    for_each_param(c.params, [&](const char* name, double* p, std::size_t n) {
        if (n > 0) tensors.emplace_back(name, p, n);
    });
    const std::uint32_t count = rd_u32(in, "tensor count");
    if (count != tensors.size())
        throw IngestError("checkpoint tensor count mismatch in " + path);
    for (auto& [name, p, n] : tensors) {
        const std::string got = rd_str(in, "tensor name");
        if (got != name)
            throw IngestError("checkpoint tensor order mismatch: expected " + name +
                              ", got " + got);
        const std::uint64_t rows = rd_u64(in, "tensor rows");
        const std::uint64_t cols = rd_u64(in, "tensor cols");
        if (rows * cols != n)
            throw IngestError("checkpoint tensor size mismatch for " + name);
        rd(in, p, n * sizeof(double), name.c_str());
    }
    return c;
}

void adam_update(ModelParams& params, Gradients& grads, AdamState& state, double lr) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));

    std::vector<std::tuple<std::string, double*, std::size_t>> pt;
    for_each_param(params, [&](const char* name, double* p, std::size_t n) {
        pt.emplace_back(name, p, n);
    });
    std::size_t idx = 0;
    grads.for_each([&](const char* name, double* g, std::size_t n) {
        auto& [pname, p, pn] = pt[idx++];
        if (pname != name || pn != n)
            throw ShapeError("adam_update: gradient/parameter mismatch at " + pname);
        if (n == 0) return;
        auto& m = state.m[pname];
        auto& v = state.v[pname];
        if (m.empty()) {
            m.assign(n, 0.0);
            v.assign(n, 0.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
            v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
        }
    });
}

double perplexity(const ModelParams& params, std::span<const int> segment) {
    if (segment.size() < 2)
        throw ParamError("perplexity: segment must contain at least 2 tokens");
    CellState s = params.zero_state();
    Vector x(params.embed);
    double nll = 0.0;
    for (const int id : segment)
        if (id < 0 || static_cast<std::size_t>(id) >= params.vocab)
            throw StateError("perplexity: token id out of vocabulary range");
    for (std::size_t t = 0; t + 1 < segment.size(); ++t) {
        const int id = segment[t];
        const double* row = params.embedding.table.row(static_cast<std::size_t>(id));
        std::copy(row, row + params.embed, x.begin());
        s = params.arch == Arch::Vanilla ? vanilla_step(params.vanilla, s, x)
                                         : lstm_step(params.lstm, s, x);
        const Vector logits = predict_logits(params.out, s.h);
        nll += log_sum_exp(logits) - logits[static_cast<std::size_t>(segment[t + 1])];
    }
    return std::exp(nll / static_cast<double>(segment.size() - 1));
}

TrainResult train(const TrainConfig& cfg, const TokenStream& stream,
                  std::uint64_t vocab_hash, std::size_t vocab_size,
                  const CheckpointSink& sink, const EpochCallback& on_epoch) {
    cfg.validate();
    if (vocab_size == 0) throw ParamError("train: empty vocabulary");
    for (int id : stream.ids)
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
            throw StateError("train: stream references ids outside the vocabulary");
    const std::size_t lane_len = stream.train_size() / cfg.batch;
    if (lane_len < cfg.window + 1)
        throw ParamError("train: corpus too small for batch/window configuration");
    if (stream.valid_size() < 2)
        throw ParamError("train: validation split too small");

    Rng rng(cfg.seed);
    ModelParams model = init_model(cfg.arch, cfg.hidden, cfg.embed, vocab_size, rng);
    AdamState adam;

    std::span<const int> valid(stream.ids.data() + stream.train_end, stream.valid_size());
    auto is_ckpt_epoch = [&](std::size_t e) {
        return std::find(cfg.checkpoint_epochs.begin(), cfg.checkpoint_epochs.end(), e) !=
               cfg.checkpoint_epochs.end();
    };
    auto make_ckpt = [&](std::size_t epoch, double ppl) {
        Checkpoint c;
        c.config = cfg;
        c.epoch = epoch;
        c.params = model;
        c.vocab_hash = vocab_hash;
        c.val_perplexity = ppl;
        return c;
    };

    TrainResult result;
    double ppl0 = perplexity(model, valid);
    result.best_epoch = 0;
    result.best_val_perplexity = ppl0;
    if (on_epoch) on_epoch({0, std::nan(""), ppl0, true});
    if (is_ckpt_epoch(0)) {
        Checkpoint c = make_ckpt(0, ppl0);
        if (sink) sink(c);
        result.checkpoints.push_back(std::move(c));
    }

    const std::size_t windows_per_epoch = (lane_len - 1) / cfg.window;
    std::vector<std::vector<int>> inputs(cfg.window, std::vector<int>(cfg.batch));
    std::vector<std::vector<int>> targets(cfg.window, std::vector<int>(cfg.batch));

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        BatchState state;
        state.h = Matrix(cfg.batch, cfg.hidden);
        if (cfg.arch == Arch::Lstm) state.c = Matrix(cfg.batch, cfg.hidden);

        double loss_sum = 0.0;
        for (std::size_t w = 0; w < windows_per_epoch; ++w) {
            for (std::size_t t = 0; t < cfg.window; ++t)
                for (std::size_t b = 0; b < cfg.batch; ++b) {
                    const std::size_t pos = b * lane_len + w * cfg.window + t;
                    inputs[t][b] = stream.ids[pos];
                    targets[t][b] = stream.ids[pos + 1];
                }

            WindowTape tape = forward_window(model, inputs, state);
            const double loss = window_loss(tape, targets);
            if (!std::isfinite(loss))
                throw TrainingError("training diverged (non-finite loss) at epoch " +
                                    std::to_string(epoch) + ", window " +
                                    std::to_string(w));
            loss_sum += loss;

            Gradients grads = Gradients::zeros_like(model);
            backward_window(model, tape, cross_entropy_dlogits(tape, targets), grads);
            if (cfg.grad_clip > 0.0) {
                const double norm = std::sqrt(grads.squared_norm());
                if (norm > cfg.grad_clip) grads.scale(cfg.grad_clip / norm);
            }
            adam_update(model, grads, adam, cfg.learning_rate);
        }

        const double ppl = perplexity(model, valid);
        const bool best = ppl < result.best_val_perplexity;
        if (best) {
            result.best_val_perplexity = ppl;
            result.best_epoch = epoch;
        }
        if (on_epoch)
            on_epoch({epoch, loss_sum / static_cast<double>(windows_per_epoch), ppl, best});
        if (is_ckpt_epoch(epoch)) {
            Checkpoint c = make_ckpt(epoch, ppl);
            if (sink) sink(c);
            result.checkpoints.push_back(std::move(c));
        }
    }
    return result;
}

}  // namespace rnnorbit
