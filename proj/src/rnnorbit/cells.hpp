#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnnorbit/numerics.hpp"

namespace rnnorbit {

enum class Arch { Vanilla, Lstm };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);

// Vanilla transition h' = tanh(x·W_xh + h·W_hh + b_h).
// Weight layout is (input dim × hidden) so row vectors multiply from the
// left; fan-in of each matrix is its row count.
struct VanillaParams {
    Matrix w_xh;  // embed × hidden
    Matrix w_hh;  // hidden × hidden
    Vector b_h;   // hidden
};

// LSTM without peepholes:
//   i = sigmoid(x·W_xi + h·W_hi + b_i)
//   f = sigmoid(x·W_xf + h·W_hf + b_f)
//   g = tanh   (x·W_xg + h·W_hg + b_g)
//   o = sigmoid(x·W_xo + h·W_ho + b_o)
//   c' = f⊙c + i⊙g,  h' = o⊙tanh(c')
struct LstmParams {
    Matrix w_xi, w_xf, w_xg, w_xo;  // embed × hidden
    Matrix w_hi, w_hf, w_hg, w_ho;  // hidden × hidden
    Vector b_i, b_f, b_g, b_o;      // hidden
};

struct CellState {
    Vector h;
    Vector c;  // empty for vanilla
};

struct OutputLayer {
    Matrix w_o;  // vocab × hidden
    Vector b_o;  // vocab
};

struct Embedding {
    Matrix table;  // vocab × embed
};

// Everything trainable for one architecture.
struct ModelParams {
    Arch arch = Arch::Vanilla;
    std::size_t hidden = 0;
    std::size_t embed = 0;
    std::size_t vocab = 0;
    Embedding embedding;
    VanillaParams vanilla;
    LstmParams lstm;
    OutputLayer out;

    CellState zero_state() const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, LSTM
// forget bias 1.0. Deterministic given the rng.
ModelParams init_model(Arch arch, std::size_t hidden, std::size_t embed,
                       std::size_t vocab, Rng& rng);

// Zero-filled model with the right shapes (checkpoint loading).
ModelParams alloc_model(Arch arch, std::size_t hidden, std::size_t embed,
                        std::size_t vocab);

CellState vanilla_step(const VanillaParams& p, const CellState& s, const Vector& x);
CellState lstm_step(const LstmParams& p, const CellState& s, const Vector& x);
Vector predict_logits(const OutputLayer& o, const Vector& h);

// ---- Batched window forward/backward (truncated BPTT) ----
//
// Token windows are laid out [step][batch]. Hidden state rows are one
// batch element each.

struct BatchState {
    Matrix h;  // batch × hidden
    Matrix c;  // batch × hidden (lstm only)
};

// Per-step activations cached by the forward pass; backward consumes
// them to produce exact analytic gradients.
struct WindowTape {
    std::size_t batch = 0;
    std::size_t steps = 0;
    std::vector<std::vector<int>> inputs;  // [step][batch] token ids
    std::vector<Matrix> x;                 // embedded inputs
    std::vector<Matrix> h;                 // h[0] = initial, h[t+1] after step t
    std::vector<Matrix> c;                 // lstm cell states, same indexing
    std::vector<Matrix> gi, gf, gg, go;    // lstm gate activations
    std::vector<Matrix> tanh_c;            // tanh(c') per step
    std::vector<Matrix> probs;             // softmax rows per step (batch × vocab)
};

// Gradients with the same shapes as ModelParams.
struct Gradients {
    Matrix d_embedding;
    VanillaParams vanilla;
    LstmParams lstm;
    OutputLayer out;

    static Gradients zeros_like(const ModelParams& m);
    double squared_norm() const;
    void scale(double s);
    // Visit every tensor as a flat span, paired with a stable name.
    template <typename F>
    void for_each(F&& f);
};

// Runs the window under teacher forcing from `state` (updated in place
// to the post-window state) and returns the tape, including softmax
// probabilities for every step.
WindowTape forward_window(const ModelParams& m,
                          const std::vector<std::vector<int>>& tokens,
                          BatchState& state);

// Mean cross-entropy of the tape's predictions against `targets`.
double window_loss(const WindowTape& tape,
                   const std::vector<std::vector<int>>& targets);

// Backpropagation through time over the tape. `d_logits[t]` is the
// upstream gradient of the loss w.r.t. the step-t logits (batch ×
// vocab). Gradients are accumulated into `grads`.
void backward_window(const ModelParams& m, const WindowTape& tape,
                     const std::vector<Matrix>& d_logits, Gradients& grads);

// d_logits for mean cross-entropy: (probs - onehot(target)) / (batch·steps).
std::vector<Matrix> cross_entropy_dlogits(const WindowTape& tape,
                                          const std::vector<std::vector<int>>& targets);

template <typename F>
void Gradients::for_each(F&& f) {
    auto mat = [&](const char* name, Matrix& m) { f(name, m.data.data(), m.data.size()); };
    auto vec = [&](const char* name, Vector& v) { f(name, v.data(), v.size()); };
    mat("embedding", d_embedding);
    mat("van.w_xh", vanilla.w_xh);
    mat("van.w_hh", vanilla.w_hh);
    vec("van.b_h", vanilla.b_h);
    mat("lstm.w_xi", lstm.w_xi);
    mat("lstm.w_xf", lstm.w_xf);
    mat("lstm.w_xg", lstm.w_xg);
    mat("lstm.w_xo", lstm.w_xo);
    mat("lstm.w_hi", lstm.w_hi);
    mat("lstm.w_hf", lstm.w_hf);
    mat("lstm.w_hg", lstm.w_hg);
    mat("lstm.w_ho", lstm.w_ho);
    vec("lstm.b_i", lstm.b_i);
    vec("lstm.b_f", lstm.b_f);
    vec("lstm.b_g", lstm.b_g);
    vec("lstm.b_o", lstm.b_o);
    mat("out.w_o", out.w_o);
    vec("out.b_o", out.b_o);
}

// Parameter tensors of a model, visited in the same order as
// Gradients::for_each (Adam keys its state off the names).
template <typename F>
void for_each_param(ModelParams& m, F&& f) {
    auto mat = [&](const char* name, Matrix& t) { f(name, t.data.data(), t.data.size()); };
    auto vec = [&](const char* name, Vector& v) { f(name, v.data(), v.size()); };
    mat("embedding", m.embedding.table);
    mat("van.w_xh", m.vanilla.w_xh);
    mat("van.w_hh", m.vanilla.w_hh);
    vec("van.b_h", m.vanilla.b_h);
    mat("lstm.w_xi", m.lstm.w_xi);
    mat("lstm.w_xf", m.lstm.w_xf);
    mat("lstm.w_xg", m.lstm.w_xg);
    mat("lstm.w_xo", m.lstm.w_xo);
    mat("lstm.w_hi", m.lstm.w_hi);
    mat("lstm.w_hf", m.lstm.w_hf);
    mat("lstm.w_hg", m.lstm.w_hg);
    mat("lstm.w_ho", m.lstm.w_ho);
    vec("lstm.b_i", m.lstm.b_i);
    vec("lstm.b_f", m.lstm.b_f);
    vec("lstm.b_g", m.lstm.b_g);
    vec("lstm.b_o", m.lstm.b_o);
    mat("out.w_o", m.out.w_o);
    vec("out.b_o", m.out.b_o);
}

}  // namespace rnnorbit
