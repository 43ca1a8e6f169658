#include "rnnorbit/cells.hpp"

#include <cmath>

namespace rnnorbit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_shape(bool ok, const char* msg) {
    if (!ok) throw ShapeError(msg);
}

void fill_uniform(Matrix& m, double a, Rng& rng) {
    for (double& x : m.data) x = rng.uniform(-a, a);
}

void add_colsum(const Matrix& m, Vector& v) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) v[j] += row[j];
    }
}

}  // namespace

std::string arch_name(Arch a) { return a == Arch::Vanilla ? "vanilla" : "lstm"; }

Arch arch_from_name(const std::string& name) {
    if (name == "vanilla") return Arch::Vanilla;
    if (name == "lstm") return Arch::Lstm;
    throw ParamError("unknown architecture: " + name);
}

CellState ModelParams::zero_state() const {
    CellState s;
    s.h.assign(hidden, 0.0);
    if (arch == Arch::Lstm) s.c.assign(hidden, 0.0);
    return s;
}

ModelParams init_model(Arch arch, std::size_t hidden, std::size_t embed,
                       std::size_t vocab, Rng& rng) {
    if (hidden == 0 || embed == 0 || vocab == 0)
        throw ParamError("init_model: sizes must be positive");
    ModelParams m;
    m.arch = arch;
    m.hidden = hidden;
    m.embed = embed;
    m.vocab = vocab;

    const double a_x = 1.0 / std::sqrt(static_cast<double>(embed));
    const double a_h = 1.0 / std::sqrt(static_cast<double>(hidden));

    m.embedding.table = Matrix(vocab, embed);
    fill_uniform(m.embedding.table, a_x, rng);

    if (arch == Arch::Vanilla) {
        m.vanilla.w_xh = Matrix(embed, hidden);
        m.vanilla.w_hh = Matrix(hidden, hidden);
        m.vanilla.b_h.assign(hidden, 0.0);
        fill_uniform(m.vanilla.w_xh, a_x, rng);
        fill_uniform(m.vanilla.w_hh, a_h, rng);
    } else {
        auto gate = [&](Matrix& wx, Matrix& wh, Vector& b, double bias) {
            wx = Matrix(embed, hidden);
            wh = Matrix(hidden, hidden);
            b.assign(hidden, bias);
            fill_uniform(wx, a_x, rng);
            fill_uniform(wh, a_h, rng);
        };
        gate(m.lstm.w_xi, m.lstm.w_hi, m.lstm.b_i, 0.0);
        gate(m.lstm.w_xf, m.lstm.w_hf, m.lstm.b_f, 1.0);  // forget bias 1.0
        gate(m.lstm.w_xg, m.lstm.w_hg, m.lstm.b_g, 0.0);
        gate(m.lstm.w_xo, m.lstm.w_ho, m.lstm.b_o, 0.0);
    }

    m.out.w_o = Matrix(vocab, hidden);
    m.out.b_o.assign(vocab, 0.0);
    fill_uniform(m.out.w_o, a_h, rng);
    return m;
}

ModelParams alloc_model(Arch arch, std::size_t hidden, std::size_t embed,
                        std::size_t vocab) {
    ModelParams m;
    m.arch = arch;
    m.hidden = hidden;
    m.embed = embed;
    m.vocab = vocab;
    m.embedding.table = Matrix(vocab, embed);
    if (arch == Arch::Vanilla) {
        m.vanilla.w_xh = Matrix(embed, hidden);
        m.vanilla.w_hh = Matrix(hidden, hidden);
        m.vanilla.b_h.assign(hidden, 0.0);
    } else {
        auto gate = [&](Matrix& wx, Matrix& wh, Vector& b) {
            wx = Matrix(embed, hidden);
            wh = Matrix(hidden, hidden);
            b.assign(hidden, 0.0);
        };
        gate(m.lstm.w_xi, m.lstm.w_hi, m.lstm.b_i);
        gate(m.lstm.w_xf, m.lstm.w_hf, m.lstm.b_f);
        gate(m.lstm.w_xg, m.lstm.w_hg, m.lstm.b_g);
        gate(m.lstm.w_xo, m.lstm.w_ho, m.lstm.b_o);
    }
    m.out.w_o = Matrix(vocab, hidden);
    m.out.b_o.assign(vocab, 0.0);
    return m;
}

CellState vanilla_step(const VanillaParams& p, const CellState& s, const Vector& x) {
    check_shape(x.size() == p.w_xh.rows, "vanilla_step: input dim mismatch");
    check_shape(s.h.size() == p.w_hh.rows, "vanilla_step: hidden dim mismatch");
    Vector a = affine_row(x, p.w_xh, p.b_h);
    const std::size_t hdim = a.size();
    for (std::size_t k = 0; k < s.h.size(); ++k) {
        const double hk = s.h[k];
        const double* wrow = p.w_hh.row(k);
        for (std::size_t j = 0; j < hdim; ++j) a[j] += hk * wrow[j];
    }
    CellState out;
    out.h.resize(hdim);
    for (std::size_t j = 0; j < hdim; ++j) out.h[j] = std::tanh(a[j]);
    return out;
}

CellState lstm_step(const LstmParams& p, const CellState& s, const Vector& x) {
    check_shape(x.size() == p.w_xi.rows, "lstm_step: input dim mismatch");
    check_shape(s.h.size() == p.w_hi.rows, "lstm_step: hidden dim mismatch");
    check_shape(s.c.size() == s.h.size(), "lstm_step: cell dim mismatch");
    auto pre = [&](const Matrix& wx, const Matrix& wh, const Vector& b) {
        Vector a = affine_row(x, wx, b);
        for (std::size_t k = 0; k < s.h.size(); ++k) {
            const double hk = s.h[k];
            const double* wrow = wh.row(k);
            for (std::size_t j = 0; j < a.size(); ++j) a[j] += hk * wrow[j];
        }
        return a;
    };
    Vector i = pre(p.w_xi, p.w_hi, p.b_i);
    Vector f = pre(p.w_xf, p.w_hf, p.b_f);
    Vector g = pre(p.w_xg, p.w_hg, p.b_g);
    Vector o = pre(p.w_xo, p.w_ho, p.b_o);
    const std::size_t hdim = i.size();
    CellState out;
    out.h.resize(hdim);
    out.c.resize(hdim);
    for (std::size_t j = 0; j < hdim; ++j) {
        const double ij = sigmoid(i[j]);
        const double fj = sigmoid(f[j]);
        const double gj = std::tanh(g[j]);
        const double oj = sigmoid(o[j]);
        out.c[j] = fj * s.c[j] + ij * gj;
        out.h[j] = oj * std::tanh(out.c[j]);
    }
    return out;
}

Vector predict_logits(const OutputLayer& o, const Vector& h) {
    check_shape(h.size() == o.w_o.cols, "predict_logits: hidden dim mismatch");
    Vector logits(o.b_o);
    for (std::size_t v = 0; v < o.w_o.rows; ++v) {
        const double* wrow = o.w_o.row(v);
        double s = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) s += wrow[j] * h[j];
        logits[v] += s;
    }
    return logits;
}

Gradients Gradients::zeros_like(const ModelParams& m) {
    Gradients g;
    g.d_embedding = Matrix(m.embedding.table.rows, m.embedding.table.cols);
    if (m.arch == Arch::Vanilla) {
        g.vanilla.w_xh = Matrix(m.vanilla.w_xh.rows, m.vanilla.w_xh.cols);
        g.vanilla.w_hh = Matrix(m.vanilla.w_hh.rows, m.vanilla.w_hh.cols);
        g.vanilla.b_h.assign(m.vanilla.b_h.size(), 0.0);
    } else {
        auto z = [](const Matrix& t) { return Matrix(t.rows, t.cols); };
        g.lstm.w_xi = z(m.lstm.w_xi); g.lstm.w_xf = z(m.lstm.w_xf);
        g.lstm.w_xg = z(m.lstm.w_xg); g.lstm.w_xo = z(m.lstm.w_xo);
        g.lstm.w_hi = z(m.lstm.w_hi); g.lstm.w_hf = z(m.lstm.w_hf);
        g.lstm.w_hg = z(m.lstm.w_hg); g.lstm.w_ho = z(m.lstm.w_ho);
        g.lstm.b_i.assign(m.lstm.b_i.size(), 0.0);
        g.lstm.b_f.assign(m.lstm.b_f.size(), 0.0);
        g.lstm.b_g.assign(m.lstm.b_g.size(), 0.0);
        g.lstm.b_o.assign(m.lstm.b_o.size(), 0.0);
    }
    g.out.w_o = Matrix(m.out.w_o.rows, m.out.w_o.cols);
    g.out.b_o.assign(m.out.b_o.size(), 0.0);
    return g;
}

double Gradients::squared_norm() const {
    double s = 0.0;
    const_cast<Gradients*>(this)->for_each(
        [&](const char*, double* p, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
        });
    return s;
}

void Gradients::scale(double f) {
    for_each([&](const char*, double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) p[i] *= f;
    });
}

WindowTape forward_window(const ModelParams& m,
                          const std::vector<std::vector<int>>& tokens,
                          BatchState& state) {
    if (tokens.empty()) throw ParamError("forward_window: empty window");
    const std::size_t steps = tokens.size();
    const std::size_t batch = tokens[0].size();
    check_shape(state.h.rows == batch && state.h.cols == m.hidden,
                "forward_window: state shape mismatch");

    WindowTape tape;
    tape.batch = batch;
    tape.steps = steps;
    tape.inputs = tokens;
    tape.x.resize(steps);
    tape.h.resize(steps + 1);
    tape.h[0] = state.h;
    tape.probs.resize(steps);
    if (m.arch == Arch::Lstm) {
        tape.c.resize(steps + 1);
        tape.c[0] = state.c;
        tape.gi.resize(steps); tape.gf.resize(steps);
        tape.gg.resize(steps); tape.go.resize(steps);
        tape.tanh_c.resize(steps);
    }

    for (std::size_t t = 0; t < steps; ++t) {
        check_shape(tokens[t].size() == batch, "forward_window: ragged window");
        // Gather embedding rows.
        Matrix x(batch, m.embed);
        for (std::size_t b = 0; b < batch; ++b) {
            const int id = tokens[t][b];
            if (id < 0 || static_cast<std::size_t>(id) >= m.vocab)
                throw ParamError("forward_window: token id out of range");
            const double* src = m.embedding.table.row(static_cast<std::size_t>(id));
            std::copy(src, src + m.embed, x.row(b));
        }
        tape.x[t] = x;

        if (m.arch == Arch::Vanilla) {
            Matrix a = matmul(x, m.vanilla.w_xh);
            Matrix hh = matmul(tape.h[t], m.vanilla.w_hh);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < m.hidden; ++j)
                    a.at(b, j) = std::tanh(a.at(b, j) + hh.at(b, j) + m.vanilla.b_h[j]);
            tape.h[t + 1] = std::move(a);
        } else {
            auto gate = [&](const Matrix& wx, const Matrix& wh, const Vector& bias,
                            bool use_tanh) {
                Matrix a = matmul(x, wx);
                Matrix hh = matmul(tape.h[t], wh);
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t j = 0; j < m.hidden; ++j) {
                        const double pre = a.at(b, j) + hh.at(b, j) + bias[j];
                        a.at(b, j) = use_tanh ? std::tanh(pre) : sigmoid(pre);
                    }
                return a;
            };
            Matrix gi = gate(m.lstm.w_xi, m.lstm.w_hi, m.lstm.b_i, false);
            Matrix gf = gate(m.lstm.w_xf, m.lstm.w_hf, m.lstm.b_f, false);
            Matrix gg = gate(m.lstm.w_xg, m.lstm.w_hg, m.lstm.b_g, true);
            Matrix go = gate(m.lstm.w_xo, m.lstm.w_ho, m.lstm.b_o, false);
            Matrix c_new(batch, m.hidden);
            Matrix tc(batch, m.hidden);
            Matrix h_new(batch, m.hidden);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < m.hidden; ++j) {
                    c_new.at(b, j) = gf.at(b, j) * tape.c[t].at(b, j) +
                                     gi.at(b, j) * gg.at(b, j);
                    tc.at(b, j) = std::tanh(c_new.at(b, j));
                    h_new.at(b, j) = go.at(b, j) * tc.at(b, j);
                }
            tape.gi[t] = std::move(gi);
            tape.gf[t] = std::move(gf);
            tape.gg[t] = std::move(gg);
            tape.go[t] = std::move(go);
            tape.c[t + 1] = std::move(c_new);
            tape.tanh_c[t] = std::move(tc);
            tape.h[t + 1] = std::move(h_new);
        }

        // Logits and softmax rows.
        Matrix logits = matmul_nt(tape.h[t + 1], m.out.w_o);
        Matrix probs(batch, m.vocab);
        for (std::size_t b = 0; b < batch; ++b) {
            double mx = -1e300;
            double* lrow = logits.row(b);
            for (std::size_t v = 0; v < m.vocab; ++v) {
                lrow[v] += m.out.b_o[v];
                mx = std::max(mx, lrow[v]);
            }
            double sum = 0.0;
            double* prow = probs.row(b);
            for (std::size_t v = 0; v < m.vocab; ++v) {
                prow[v] = std::exp(lrow[v] - mx);
                sum += prow[v];
            }
            for (std::size_t v = 0; v < m.vocab; ++v) prow[v] /= sum;
        }
        tape.probs[t] = std::move(probs);
    }

    state.h = tape.h[steps];
    if (m.arch == Arch::Lstm) state.c = tape.c[steps];
    return tape;
}

double window_loss(const WindowTape& tape,
                   const std::vector<std::vector<int>>& targets) {
    if (targets.size() != tape.steps) throw StateError("window_loss: target/tape mismatch");
    double nll = 0.0;
    for (std::size_t t = 0; t < tape.steps; ++t) {
        for (std::size_t b = 0; b < tape.batch; ++b) {
            const int y = targets[t][b];
            nll -= std::log(tape.probs[t].at(b, static_cast<std::size_t>(y)));
        }
    }
    return nll / static_cast<double>(tape.steps * tape.batch);
}

std::vector<Matrix> cross_entropy_dlogits(const WindowTape& tape,
                                          const std::vector<std::vector<int>>& targets) {
    if (targets.size() != tape.steps)
        throw StateError("cross_entropy_dlogits: target/tape mismatch");
    const double inv = 1.0 / static_cast<double>(tape.steps * tape.batch);
    std::vector<Matrix> d(tape.steps);
    for (std::size_t t = 0; t < tape.steps; ++t) {
        d[t] = tape.probs[t];
        for (std::size_t b = 0; b < tape.batch; ++b)
            d[t].at(b, static_cast<std::size_t>(targets[t][b])) -= 1.0;
        for (double& x : d[t].data) x *= inv;
    }
    return d;
}

void backward_window(const ModelParams& m, const WindowTape& tape,
                     const std::vector<Matrix>& d_logits, Gradients& grads) {
    if (d_logits.size() != tape.steps)
        throw StateError("backward_window: upstream/tape mismatch");
    const std::size_t batch = tape.batch;
    const std::size_t hdim = m.hidden;

    Matrix dh(batch, hdim);
    Matrix dc(batch, hdim);  // lstm carry

    for (std::size_t t = tape.steps; t-- > 0;) {
        const Matrix& dl = d_logits[t];
        check_shape(dl.rows == batch && dl.cols == m.vocab,
                    "backward_window: bad upstream shape");
        // Output layer.
        matmul_tn_acc(dl, tape.h[t + 1], grads.out.w_o);
        add_colsum(dl, grads.out.b_o);
        Matrix dh_out = matmul(dl, m.out.w_o);  // batch × hidden
        for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += dh_out.data[i];

        Matrix dx;  // batch × embed, filled per arch
        if (m.arch == Arch::Vanilla) {
            // Through tanh.
            Matrix da(batch, hdim);
            for (std::size_t i = 0; i < da.size(); ++i) {
                const double h = tape.h[t + 1].data[i];
                da.data[i] = dh.data[i] * (1.0 - h * h);
            }
            matmul_tn_acc(tape.x[t], da, grads.vanilla.w_xh);
            matmul_tn_acc(tape.h[t], da, grads.vanilla.w_hh);
            add_colsum(da, grads.vanilla.b_h);
            dh = matmul_nt(da, m.vanilla.w_hh);
            dx = matmul_nt(da, m.vanilla.w_xh);
        } else {
            const Matrix& gi = tape.gi[t];
            const Matrix& gf = tape.gf[t];
            const Matrix& gg = tape.gg[t];
            const Matrix& go = tape.go[t];
            const Matrix& tc = tape.tanh_c[t];
            Matrix dpi(batch, hdim), dpf(batch, hdim), dpg(batch, hdim), dpo(batch, hdim);
            for (std::size_t i = 0; i < dh.size(); ++i) {
                const double d_h = dh.data[i];
                const double o = go.data[i];
                const double tcv = tc.data[i];
                const double d_c = dc.data[i] + d_h * o * (1.0 - tcv * tcv);
                const double iv = gi.data[i];
                const double fv = gf.data[i];
                const double gv = gg.data[i];
                dpo.data[i] = d_h * tcv * o * (1.0 - o);
                dpi.data[i] = d_c * gv * iv * (1.0 - iv);
                dpf.data[i] = d_c * tape.c[t].data[i] * fv * (1.0 - fv);
                dpg.data[i] = d_c * iv * (1.0 - gv * gv);
                dc.data[i] = d_c * fv;  // carry to step t-1
            }
            matmul_tn_acc(tape.x[t], dpi, grads.lstm.w_xi);
            matmul_tn_acc(tape.x[t], dpf, grads.lstm.w_xf);
            matmul_tn_acc(tape.x[t], dpg, grads.lstm.w_xg);
            matmul_tn_acc(tape.x[t], dpo, grads.lstm.w_xo);
            matmul_tn_acc(tape.h[t], dpi, grads.lstm.w_hi);
            matmul_tn_acc(tape.h[t], dpf, grads.lstm.w_hf);
            matmul_tn_acc(tape.h[t], dpg, grads.lstm.w_hg);
            matmul_tn_acc(tape.h[t], dpo, grads.lstm.w_ho);
            add_colsum(dpi, grads.lstm.b_i);
            add_colsum(dpf, grads.lstm.b_f);
            add_colsum(dpg, grads.lstm.b_g);
            add_colsum(dpo, grads.lstm.b_o);
            dh = matmul_nt(dpi, m.lstm.w_hi);
            Matrix tmp = matmul_nt(dpf, m.lstm.w_hf);
            for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += tmp.data[i];
            tmp = matmul_nt(dpg, m.lstm.w_hg);
            for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += tmp.data[i];
            tmp = matmul_nt(dpo, m.lstm.w_ho);
            for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += tmp.data[i];

            dx = matmul_nt(dpi, m.lstm.w_xi);
            tmp = matmul_nt(dpf, m.lstm.w_xf);
            for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += tmp.data[i];
            tmp = matmul_nt(dpg, m.lstm.w_xg);
            for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += tmp.data[i];
            tmp = matmul_nt(dpo, m.lstm.w_xo);
            for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += tmp.data[i];
        }

        // Scatter input gradients into the embedding table.
        for (std::size_t b = 0; b < batch; ++b) {
            double* dst = grads.d_embedding.row(
                static_cast<std::size_t>(tape.inputs[t][b]));
            const double* src = dx.row(b);
            for (std::size_t j = 0; j < m.embed; ++j) dst[j] += src[j];
        }
    }
}

}  // namespace rnnorbit
