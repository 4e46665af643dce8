#ifndef BBLM_LSTM_HPP
#define BBLM_LSTM_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/rng.hpp"
#include "bblm/text.hpp"

namespace bblm {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Word-level LSTM language model with the embedding matrix tied to the
// decoder: logits = h_top * E^T + bias, so there is exactly one static word
// vector space. The top LSTM layer is therefore embedding_dim wide; all
// layers below it are hidden_dim wide.
struct ModelConfig {
    int vocab_size = 0;
    int embedding_dim = 64;
    int hidden_dim = 128;
    int num_layers = 2;
    double dropout_rate = 0.1;
    int bptt_window = 35;
    int batch_size = 32;
    // SGD with global-norm clipping; at desk scale the clip caps the step,
    // so the rate has to be large for conditional structure to emerge
    // within a few epochs.
    double base_lr = 20.0;
    double lr_decay_factor = 0.25;
    double grad_clip = 0.25;
    int epochs = 3;
    std::uint64_t seed = 1;

    int layer_width(int layer) const {
        return layer + 1 == num_layers ? embedding_dim : hidden_dim;
    }
    int layer_input(int layer) const {
        return layer == 0 ? embedding_dim : layer_width(layer - 1);
    }

    void validate() const {
        if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
        if (embedding_dim < 1 || hidden_dim < 1 || num_layers < 1)
            throw ConfigError("model dimensions must be >= 1");
        if (bptt_window < 1) throw ConfigError("bptt_window must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw ConfigError("dropout_rate must be in [0,1)");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
    }
};

struct LstmLayer {
    MatrixXd w_in;   // input_dim x 4H, gate order [i f g o]
    MatrixXd w_rec;  // H x 4H
    VectorXd bias;   // 4H
};

struct ModelState {
    ModelConfig config;
    MatrixXd embedding;  // V x d, shared by encoder and decoder
    std::vector<LstmLayer> layers;
    VectorXd out_bias;  // V
    double lr = 0.0;
    double best_val_ppl = std::numeric_limits<double>::infinity();
    Rng rng;
};

// Weights uniform on [-0.1, 0.1] from the seeded stream, biases zero except
// the forget-gate slice which starts at +1. Fill order is fixed (row-major
// per matrix, embedding first, then layers bottom-up) so a (config, seed)
// pair pins every parameter.
inline ModelState init_model(const ModelConfig& config) {
    config.validate();
    ModelState m;
    m.config = config;
    m.rng = Rng(config.seed);
    m.lr = config.base_lr;

    auto fill_uniform = [&](MatrixXd& mat) {
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c)
                mat(r, c) = m.rng.uniform(-0.1, 0.1);
    };

    m.embedding.resize(config.vocab_size, config.embedding_dim);
    fill_uniform(m.embedding);
    for (int l = 0; l < config.num_layers; ++l) {
        LstmLayer layer;
        int in = config.layer_input(l);
        int width = config.layer_width(l);
        layer.w_in.resize(in, 4 * width);
        layer.w_rec.resize(width, 4 * width);
        fill_uniform(layer.w_in);
        fill_uniform(layer.w_rec);
        layer.bias = VectorXd::Zero(4 * width);
        layer.bias.segment(width, width).setConstant(1.0);  // forget gate
        m.layers.push_back(std::move(layer));
    }
    m.out_bias = VectorXd::Zero(config.vocab_size);
    return m;
}

struct Hidden {
    std::vector<MatrixXd> h, c;  // per layer, B x width
};

inline Hidden zero_hidden(const ModelConfig& config, int batch) {
    Hidden s;
    for (int l = 0; l < config.num_layers; ++l) {
        s.h.push_back(MatrixXd::Zero(batch, config.layer_width(l)));
        s.c.push_back(MatrixXd::Zero(batch, config.layer_width(l)));
    }
    return s;
}

namespace detail {

inline MatrixXd sigmoid(const MatrixXd& x) {
    return ((-x.array()).exp() + 1.0).inverse().matrix();
}

// Everything the backward pass needs, recorded per step.
struct StepCache {
    std::vector<MatrixXd> x;                  // per layer: input after dropout
    std::vector<MatrixXd> h_prev, c_prev;     // per layer
    std::vector<MatrixXd> gi, gf, gg, go;     // per layer: activated gates
    std::vector<MatrixXd> c, ctan;            // per layer
    std::vector<MatrixXd> mask;               // per layer: input dropout mask
    MatrixXd top_mask;                        // dropout mask on decoder input
    MatrixXd z;                               // decoder input (top h after mask)
    std::vector<TokenId> ids;
};

struct ForwardCache {
    std::vector<StepCache> steps;
};

// Runs the recurrence over a time-major batch. Logits are not computed
// here; callers stack the returned decoder inputs and do one GEMM.
inline Hidden run_lstm(const ModelState& m,
                       const std::vector<std::vector<TokenId>>& steps,
                       const Hidden& initial, bool train_mode, Rng* rng,
                       std::vector<MatrixXd>* decoder_inputs,
                       ForwardCache* cache) {
    const ModelConfig& cfg = m.config;
    const double p = train_mode ? cfg.dropout_rate : 0.0;
    Hidden state = initial;

    auto draw_mask = [&](Eigen::Index rows, Eigen::Index cols) {
        MatrixXd mask(rows, cols);
        const double keep = 1.0 - p;
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                mask(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
        return mask;
    };

    for (const auto& ids : steps) {
        const int B = static_cast<int>(ids.size());
        StepCache sc;
        sc.ids = ids;
        MatrixXd x(B, cfg.embedding_dim);
        for (int b = 0; b < B; ++b) {
            TokenId id = ids[b];
            if (id < 0 || id >= cfg.vocab_size)
                throw DataError("token id out of range: " + std::to_string(id));
            x.row(b) = m.embedding.row(id);
        }
        for (int l = 0; l < cfg.num_layers; ++l) {
            const int H = cfg.layer_width(l);
            MatrixXd mask;
            if (p > 0.0) {
                mask = draw_mask(x.rows(), x.cols());
                x.array() *= mask.array();
            }
            MatrixXd a = x * m.layers[l].w_in;
            a.noalias() += state.h[l] * m.layers[l].w_rec;
            a.rowwise() += m.layers[l].bias.transpose();

            MatrixXd gi = sigmoid(a.middleCols(0, H));
            MatrixXd gf = sigmoid(a.middleCols(H, H));
            MatrixXd gg = a.middleCols(2 * H, H).array().tanh().matrix();
            MatrixXd go = sigmoid(a.middleCols(3 * H, H));
            MatrixXd c = gf.cwiseProduct(state.c[l]) + gi.cwiseProduct(gg);
            MatrixXd ctan = c.array().tanh().matrix();
            MatrixXd h = go.cwiseProduct(ctan);

            if (cache) {
                sc.x.push_back(x);
                sc.mask.push_back(std::move(mask));
                sc.h_prev.push_back(state.h[l]);
                sc.c_prev.push_back(state.c[l]);
                sc.gi.push_back(std::move(gi));
                sc.gf.push_back(std::move(gf));
                sc.gg.push_back(std::move(gg));
                sc.go.push_back(std::move(go));
                sc.c.push_back(c);
                sc.ctan.push_back(ctan);
            }
            state.h[l] = h;
            state.c[l] = std::move(c);
            x = state.h[l];
        }
        MatrixXd z = state.h.back();
        if (p > 0.0) {
            MatrixXd top_mask = draw_mask(z.rows(), z.cols());
            z.array() *= top_mask.array();
            if (cache) sc.top_mask = std::move(top_mask);
        }
        if (decoder_inputs) decoder_inputs->push_back(z);
        if (cache) {
            sc.z = std::move(z);
            cache->steps.push_back(std::move(sc));
        }
    }
    return state;
}

}  // namespace detail

struct ForwardResult {
    std::vector<MatrixXd> logits;      // per step, B x V
    std::vector<MatrixXd> top_hidden;  // per step, B x d (no dropout)
    Hidden final_hidden;
};

// Evaluation-mode forward pass exposing the top-layer hidden state at every
// timestep. Empty input returns empty logits and passes the hidden state
// through.
inline ForwardResult forward(const ModelState& m,
                             const std::vector<std::vector<TokenId>>& steps,
                             const Hidden& initial) {
    ForwardResult out;
    std::vector<MatrixXd> tops;
    out.final_hidden = detail::run_lstm(m, steps, initial, false, nullptr, &tops, nullptr);
    for (const auto& z : tops) {
        out.top_hidden.push_back(z);
        MatrixXd logits = z * m.embedding.transpose();
        logits.rowwise() += m.out_bias.transpose();
        out.logits.push_back(std::move(logits));
    }
    return out;
}

struct Gradients {
    MatrixXd embedding;
    std::vector<LstmLayer> layers;
    VectorXd out_bias;

    static Gradients zero(const ModelConfig& cfg) {
        Gradients g;
        g.embedding = MatrixXd::Zero(cfg.vocab_size, cfg.embedding_dim);
        for (int l = 0; l < cfg.num_layers; ++l) {
            LstmLayer layer;
            layer.w_in = MatrixXd::Zero(cfg.layer_input(l), 4 * cfg.layer_width(l));
            layer.w_rec = MatrixXd::Zero(cfg.layer_width(l), 4 * cfg.layer_width(l));
            layer.bias = VectorXd::Zero(4 * cfg.layer_width(l));
            g.layers.push_back(std::move(layer));
        }
        g.out_bias = VectorXd::Zero(cfg.vocab_size);
        return g;
    }

    double squared_norm() const {
        double s = embedding.squaredNorm() + out_bias.squaredNorm();
        for (const auto& l : layers)
            s += l.w_in.squaredNorm() + l.w_rec.squaredNorm() + l.bias.squaredNorm();
        return s;
    }

    void scale(double f) {
        embedding *= f;
        out_bias *= f;
        for (auto& l : layers) {
            l.w_in *= f;
            l.w_rec *= f;
            l.bias *= f;
        }
    }
};

// Mean cross-entropy over the chunk and its gradients. `train_mode` turns
// dropout on (masks drawn from the model RNG). The returned hidden state is
// detached, ready to carry into the next chunk.
inline double compute_gradients(ModelState& m,
                                const std::vector<std::vector<TokenId>>& inputs,
                                const std::vector<std::vector<TokenId>>& targets,
                                const Hidden& initial, bool train_mode,
                                Gradients& grads, Hidden* final_hidden) {
    const ModelConfig& cfg = m.config;
    const int T = static_cast<int>(inputs.size());
    if (T == 0) throw DataError("empty training chunk");
    const int B = static_cast<int>(inputs[0].size());

    detail::ForwardCache cache;
    std::vector<MatrixXd> decoder_inputs;
    Hidden last = detail::run_lstm(m, inputs, initial, train_mode,
                                   train_mode ? &m.rng : nullptr,
                                   &decoder_inputs, &cache);
    if (final_hidden) *final_hidden = last;

    MatrixXd stacked(T * B, cfg.embedding_dim);
    for (int t = 0; t < T; ++t) stacked.middleRows(t * B, B) = decoder_inputs[t];

    RowMajorMatrix logits = stacked * m.embedding.transpose();
    logits.rowwise() += m.out_bias.transpose();

    const double denom = static_cast<double>(T) * B;
    double loss = 0.0;
    // softmax rows in place, accumulate NLL, then subtract the one-hot.
    for (int t = 0; t < T; ++t) {
        for (int b = 0; b < B; ++b) {
            auto row = logits.row(t * B + b);
            double mx = row.maxCoeff();
            double lse = std::log((row.array() - mx).exp().sum()) + mx;
            TokenId target = targets[t][b];
            if (target < 0 || target >= cfg.vocab_size)
                throw DataError("target id out of range");
            loss += lse - row(target);
            row = (row.array() - lse).exp().matrix();
            row(target) -= 1.0;
        }
    }
    loss /= denom;
    logits *= 1.0 / denom;  // now dLogits

    grads.embedding.noalias() += logits.transpose() * stacked;
    grads.out_bias.noalias() += logits.colwise().sum().transpose();
    MatrixXd dstacked = logits * m.embedding;

    std::vector<MatrixXd> dh(cfg.num_layers), dc(cfg.num_layers);
    for (int l = 0; l < cfg.num_layers; ++l) {
        dh[l] = MatrixXd::Zero(B, cfg.layer_width(l));
        dc[l] = MatrixXd::Zero(B, cfg.layer_width(l));
    }

    for (int t = T - 1; t >= 0; --t) {
        const auto& sc = cache.steps[t];
        MatrixXd dz = dstacked.middleRows(t * B, B);
        if (sc.top_mask.size() > 0) dz.array() *= sc.top_mask.array();
        dh[cfg.num_layers - 1] += dz;
        MatrixXd dx_below;
        for (int l = cfg.num_layers - 1; l >= 0; --l) {
            const int H = cfg.layer_width(l);
            MatrixXd dho = dh[l];
            MatrixXd dgo = dho.cwiseProduct(sc.ctan[l]);
            MatrixXd dcl = dc[l] +
                           dho.cwiseProduct(sc.go[l])
                               .cwiseProduct((1.0 - sc.ctan[l].array().square()).matrix());
            MatrixXd dgf = dcl.cwiseProduct(sc.c_prev[l]);
            MatrixXd dgi = dcl.cwiseProduct(sc.gg[l]);
            MatrixXd dgg = dcl.cwiseProduct(sc.gi[l]);
            dc[l] = dcl.cwiseProduct(sc.gf[l]);

            MatrixXd da(B, 4 * H);
            da.middleCols(0, H) =
                dgi.cwiseProduct(sc.gi[l]).cwiseProduct((1.0 - sc.gi[l].array()).matrix());
            da.middleCols(H, H) =
                dgf.cwiseProduct(sc.gf[l]).cwiseProduct((1.0 - sc.gf[l].array()).matrix());
            da.middleCols(2 * H, H) =
                dgg.cwiseProduct((1.0 - sc.gg[l].array().square()).matrix());
            da.middleCols(3 * H, H) =
                dgo.cwiseProduct(sc.go[l]).cwiseProduct((1.0 - sc.go[l].array()).matrix());

            grads.layers[l].w_in.noalias() += sc.x[l].transpose() * da;
            grads.layers[l].w_rec.noalias() += sc.h_prev[l].transpose() * da;
            grads.layers[l].bias.noalias() += da.colwise().sum().transpose();

            dh[l] = da * m.layers[l].w_rec.transpose();
            MatrixXd dx = da * m.layers[l].w_in.transpose();
            if (sc.mask[l].size() > 0) dx.array() *= sc.mask[l].array();
            if (l > 0) {
                dh[l - 1] += dx;
            } else {
                for (int b = 0; b < B; ++b)
                    grads.embedding.row(sc.ids[b]) += dx.row(b);
            }
        }
    }
    return loss;
}

// Scales gradients so their global L2 norm is at most `clip`.
inline double clip_gradients(Gradients& grads, double clip) {
    double norm = std::sqrt(grads.squared_norm());
    if (clip > 0.0 && norm > clip) grads.scale(clip / norm);
    return norm;
}

inline void sgd_update(ModelState& m, const Gradients& grads) {
    m.embedding -= m.lr * grads.embedding;
    m.out_bias -= m.lr * grads.out_bias;
    for (int l = 0; l < m.config.num_layers; ++l) {
        m.layers[l].w_in -= m.lr * grads.layers[l].w_in;
        m.layers[l].w_rec -= m.lr * grads.layers[l].w_rec;
        m.layers[l].bias -= m.lr * grads.layers[l].bias;
    }
}

// exp(mean token NLL) over one stream; dropout off, hidden state carried
// across chunks. Scores predictions for positions 1..N-1.
inline double perplexity(const ModelState& m, const std::vector<TokenId>& ids) {
    if (ids.size() < 2) throw DataError("perplexity needs a corpus of at least 2 tokens");
    const ModelConfig& cfg = m.config;
    Hidden state = zero_hidden(cfg, 1);
    double total_nll = 0.0;
    std::int64_t count = 0;
    const std::size_t chunk = static_cast<std::size_t>(cfg.bptt_window);
    for (std::size_t pos = 0; pos + 1 < ids.size(); pos += chunk) {
        std::size_t len = std::min(chunk, ids.size() - 1 - pos);
        std::vector<std::vector<TokenId>> steps(len);
        for (std::size_t t = 0; t < len; ++t) steps[t] = {ids[pos + t]};
        std::vector<MatrixXd> tops;
        state = detail::run_lstm(m, steps, state, false, nullptr, &tops, nullptr);
        MatrixXd stacked(len, cfg.embedding_dim);
        for (std::size_t t = 0; t < len; ++t) stacked.row(t) = tops[t];
        RowMajorMatrix logits = stacked * m.embedding.transpose();
        logits.rowwise() += m.out_bias.transpose();
        for (std::size_t t = 0; t < len; ++t) {
            auto row = logits.row(t);
            double mx = row.maxCoeff();
            double lse = std::log((row.array() - mx).exp().sum()) + mx;
            total_nll += lse - row(ids[pos + t + 1]);
            ++count;
        }
    }
    return std::exp(total_nll / static_cast<double>(count));
}

// Multiplies the learning rate by the decay factor whenever validation
// perplexity fails to improve on the best seen, once the activation epoch
// is reached. Best-so-far tracking runs from epoch 1.
struct PlateauScheduler {
    int activation_epoch = 1;  // 1-based
    double factor = 0.25;

    double step(ModelState& m, int epoch, double val_ppl) {
        bool improved = val_ppl < m.best_val_ppl;
        if (improved) m.best_val_ppl = val_ppl;
        if (epoch >= activation_epoch && !improved) m.lr *= factor;
        return m.lr;
    }
};

enum class ScheduleKind { EpochEnd, Dense };

struct CheckpointMark {
    int epoch;  // 1-based
    int batch;  // 1-based, within the epoch
};

// Dense cadence: within epoch 1 a checkpoint every 2% of batches up to 30%,
// then every 10%; later epochs checkpoint at their end only.
inline std::vector<CheckpointMark> make_schedule(ScheduleKind kind, int epochs,
                                                 int batches_per_epoch) {
    std::vector<CheckpointMark> marks;
    const int n = batches_per_epoch;
    if (kind == ScheduleKind::Dense) {
        std::vector<int> batches;
        for (int pct = 2; pct <= 30; pct += 2)
            batches.push_back(std::max(1, static_cast<int>(std::lround(pct / 100.0 * n))));
        for (int pct = 40; pct <= 100; pct += 10)
            batches.push_back(std::max(1, static_cast<int>(std::lround(pct / 100.0 * n))));
        batches.push_back(n);
        std::sort(batches.begin(), batches.end());
        batches.erase(std::unique(batches.begin(), batches.end()), batches.end());
        for (int b : batches) marks.push_back({1, b});
        for (int e = 2; e <= epochs; ++e) marks.push_back({e, n});
    } else {
        for (int e = 1; e <= epochs; ++e) marks.push_back({e, n});
    }
    return marks;
}

struct TrainHooks {
    // Called for the initial state (epoch 0) and at every schedule mark.
    std::function<void(const ModelState&, int epoch, int batch, double fraction)>
        on_checkpoint;
    // Called once per batch; val_ppl is NaN except on the last batch of an
    // epoch, where it carries that epoch's validation perplexity.
    std::function<void(int epoch, int batch, double fraction, double lr,
                       double train_loss, double val_ppl)>
        on_batch;
};

// Truncated-BPTT training over a contiguous id stream split into
// batch_size parallel streams. Deterministic for a fixed (config, seed,
// corpus). Throws DivergenceError when the loss goes non-finite; already
// emitted checkpoints are untouched.
inline void train(ModelState& m, const std::vector<TokenId>& train_ids,
                  const std::vector<TokenId>& valid_ids, ScheduleKind schedule,
                  const TrainHooks& hooks) {
    const ModelConfig& cfg = m.config;
    const int B = cfg.batch_size;
    const std::size_t stream_len = train_ids.size() / B;
    if (stream_len < 2)
        throw DataError("corpus too small for batch size " + std::to_string(B));

    const int usable = static_cast<int>(stream_len) - 1;
    const int batches = (usable + cfg.bptt_window - 1) / cfg.bptt_window;
    auto marks = make_schedule(schedule, cfg.epochs, batches);

    // Plateau scheduling activates at ceil(epochs / 2).
    PlateauScheduler plateau;
    plateau.activation_epoch = std::max(1, (cfg.epochs + 1) / 2);
    plateau.factor = cfg.lr_decay_factor;

    if (hooks.on_checkpoint) hooks.on_checkpoint(m, 0, 0, 0.0);

    std::size_t next_mark = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Hidden state = zero_hidden(cfg, B);
        for (int batch = 1; batch <= batches; ++batch) {
            const int pos = (batch - 1) * cfg.bptt_window;
            const int len = std::min(cfg.bptt_window, usable - pos);
            std::vector<std::vector<TokenId>> inputs(len), targets(len);
            for (int t = 0; t < len; ++t) {
                inputs[t].resize(B);
                targets[t].resize(B);
                for (int b = 0; b < B; ++b) {
                    const std::size_t base = static_cast<std::size_t>(b) * stream_len;
                    inputs[t][b] = train_ids[base + pos + t];
                    targets[t][b] = train_ids[base + pos + t + 1];
                }
            }
            Gradients grads = Gradients::zero(cfg);
            Hidden next_state;
            double loss =
                compute_gradients(m, inputs, targets, state, true, grads, &next_state);
            if (!std::isfinite(loss))
                throw DivergenceError("training loss diverged at epoch " +
                                      std::to_string(epoch) + " batch " +
                                      std::to_string(batch));
            clip_gradients(grads, cfg.grad_clip);
            sgd_update(m, grads);
            state = std::move(next_state);

            const double fraction = static_cast<double>(batch) / batches;
            double val_ppl = std::numeric_limits<double>::quiet_NaN();
            if (batch == batches && !valid_ids.empty()) {
                val_ppl = perplexity(m, valid_ids);
                plateau.step(m, epoch, val_ppl);
            }
            if (hooks.on_batch)
                hooks.on_batch(epoch, batch, fraction, m.lr, loss, val_ppl);
            while (next_mark < marks.size() && marks[next_mark].epoch == epoch &&
                   marks[next_mark].batch == batch) {
                if (hooks.on_checkpoint) hooks.on_checkpoint(m, epoch, batch, fraction);
                ++next_mark;
            }
        }
    }
}

}  // namespace bblm

#endif
