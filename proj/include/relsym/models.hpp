#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "relsym/dataset.hpp"
#include "relsym/nn.hpp"
#include "relsym/rng.hpp"
#include "relsym/tensor.hpp"

namespace relsym {

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

enum class DiscretizationMode { SoftSample, HardThreshold };

struct GumbelConfig {
    double temperature = 1.0;
    DiscretizationMode mode = DiscretizationMode::SoftSample;
    bool straight_through = false; // soft samples by default; ST kept as a config flag
};

/// Soft mode: sigma((logits + G1 - G2) / tau) with two i.i.d. standard Gumbel
/// draws per element (row-major order). Hard mode: deterministic 1[logit > 0]
/// (exact zero maps to 0); gradients exist in soft mode only, so hard mode
/// inside a gradient pass is a contract error.
inline Tensor gumbel_sigmoid(const Tensor& logits, const GumbelConfig& cfg, Rng& rng) {
    if (cfg.temperature <= 0.0) throw ContractError("gumbel_sigmoid: temperature must be positive");
    if (cfg.mode == DiscretizationMode::HardThreshold) {
        if (logits.requires_grad())
            throw ContractError("gumbel_sigmoid: hard threshold requested inside a gradient pass");
        std::vector<double> bits(logits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = logits.value()[i] > 0.0 ? 1.0 : 0.0;
        return Tensor::make(logits.rows(), logits.cols(), std::move(bits));
    }
    std::vector<double> noise(logits.size());
    for (double& v : noise) {
        const double g1 = rng.gumbel();
        const double g2 = rng.gumbel();
        v = g1 - g2;
    }
    Tensor shifted = add(logits, Tensor::make(logits.rows(), logits.cols(), std::move(noise)));
    Tensor soft = sigmoid(scale(shifted, 1.0 / cfg.temperature));
    if (!cfg.straight_through) return soft;
    std::vector<double> hard(soft.size());
    for (std::size_t i = 0; i < hard.size(); ++i) hard[i] = soft.value()[i] > 0.5 ? 1.0 : 0.0;
    // forward emits the hard bits, gradient flows through the soft sample
    return add(sub(Tensor::make(soft.rows(), soft.cols(), std::move(hard)), soft.detached()), soft);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct ModelCheckpoint {
    std::string arch; // "relational" | "deepsym" | "attentive"
    ParameterSet params;
    GumbelConfig gumbel;
    std::size_t symbol_bits = 4;
    std::size_t heads = 4;
    std::size_t hidden = 128; // shared hidden width; also the query/key width d
    std::size_t max_objects = 0; // deepsym capacity, 0 otherwise
    std::uint64_t train_seed = 0;

    ModelCheckpoint frozen() const {
        ModelCheckpoint out = *this;
        out.params = params.frozen();
        return out;
    }

    GumbelConfig cfg(DiscretizationMode mode) const {
        GumbelConfig c = gumbel;
        c.mode = mode;
        return c;
    }

    std::vector<std::size_t> encoder_widths() const {
        if (arch == "deepsym") return {6 * max_objects, hidden, hidden, symbol_bits * max_objects};
        return {6, hidden, hidden, symbol_bits};
    }
    std::vector<std::size_t> trunk_widths() const { return {6, hidden, hidden}; }
    std::vector<std::size_t> aggregate_widths() const {
        return {symbol_bits + 6, hidden, hidden, hidden};
    }
    std::vector<std::size_t> decoder_widths() const {
        if (arch == "deepsym")
            return {symbol_bits * max_objects + 6, hidden, hidden, 6 * max_objects};
        if (arch == "attentive") return {heads * hidden + 6, hidden, hidden, 6};
        return {heads * hidden, hidden, hidden, 6};
    }
};

/// Fresh checkpoint with deterministically initialized parameters. The
/// architecture tag decides which parameter paths exist.
inline ModelCheckpoint make_model(const std::string& arch, std::uint64_t seed,
                                  std::size_t hidden = 128, std::size_t symbol_bits = 4,
                                  std::size_t heads = 4, std::size_t max_objects = 0,
                                  double tau = 1.0, bool straight_through = false) {
    if (arch != "relational" && arch != "deepsym" && arch != "attentive")
        throw ContractError("unknown architecture tag: " + arch);
    ModelCheckpoint ckpt;
    ckpt.arch = arch;
    ckpt.params = ParameterSet(seed);
    ckpt.gumbel.temperature = tau;
    ckpt.gumbel.straight_through = straight_through;
    ckpt.symbol_bits = symbol_bits;
    ckpt.heads = heads;
    ckpt.hidden = hidden;
    ckpt.train_seed = seed;
    if (arch == "deepsym") {
        if (max_objects < 2) throw ContractError("deepsym needs max_objects >= 2");
        ckpt.max_objects = max_objects;
    }

    init_mlp(ckpt.params, "enc", ckpt.encoder_widths());
    init_mlp(ckpt.params, "dec", ckpt.decoder_widths());
    if (arch == "relational") {
        init_mlp(ckpt.params, "attn.trunk", ckpt.trunk_widths());
        ckpt.params.add_weight("attn.q.w", hidden, heads * hidden);
        ckpt.params.add_zeros("attn.q.b", 1, heads * hidden);
        ckpt.params.add_weight("attn.k.w", hidden, heads * hidden);
        ckpt.params.add_zeros("attn.k.b", 1, heads * hidden);
        init_mlp(ckpt.params, "agg", ckpt.aggregate_widths());
    } else if (arch == "attentive") {
        ckpt.params.add_weight("attn.q.w", symbol_bits, heads * hidden);
        ckpt.params.add_zeros("attn.q.b", 1, heads * hidden);
        ckpt.params.add_weight("attn.k.w", symbol_bits, heads * hidden);
        ckpt.params.add_zeros("attn.k.b", 1, heads * hidden);
        ckpt.params.add_weight("attn.v.w", symbol_bits, heads * hidden);
        ckpt.params.add_zeros("attn.v.b", 1, heads * hidden);
    }
    return ckpt;
}

// ---------------------------------------------------------------------------
// Batch tensors
// ---------------------------------------------------------------------------

inline Tensor batch_features(const Batch& b) {
    return Tensor::make(b.rows(), 6, b.features);
}
inline Tensor batch_actions(const Batch& b) {
    return Tensor::make(b.samples, 6, b.actions);
}
/// Action vector replicated onto every object row of its sample.
inline Tensor batch_action_rows(const Batch& b) {
    std::vector<double> rows(b.rows() * 6);
    for (std::size_t s = 0; s < b.samples; ++s)
        for (std::size_t i = 0; i < b.max_objects; ++i)
            for (int j = 0; j < 6; ++j)
                rows[(s * b.max_objects + i) * 6 + j] = b.actions[s * 6 + j];
    return Tensor::make(b.rows(), 6, std::move(rows));
}
inline Tensor batch_effects(const Batch& b) {
    return Tensor::make(b.rows(), 6, b.effects);
}
inline Tensor batch_mask6(const Batch& b) {
    std::vector<double> m(b.rows() * 6, 0.0);
    for (std::size_t r = 0; r < b.rows(); ++r)
        if (b.mask[r])
            for (int j = 0; j < 6; ++j) m[r * 6 + j] = 1.0;
    return Tensor::make(b.rows(), 6, std::move(m));
}

// ---------------------------------------------------------------------------
// Hard-mode reductions
//
// Hard-mode forwards must be deterministic and permutation equivariant down
// to the bit. The only order-sensitive float operations are reductions over
// objects, so those run through canonical_sum (sorted fold) here.
// ---------------------------------------------------------------------------

namespace modeldetail {

/// A @ M with binary A, summing the selected rows in canonical order.
inline Tensor hard_select_matmul(const Tensor& a, const Tensor& m) {
    const std::size_t n = a.rows(), w = m.cols();
    std::vector<double> out(n * w, 0.0);
    std::vector<double> picked;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> sel;
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a.at(i, j) == 1.0) sel.push_back(j);
        for (std::size_t c = 0; c < w; ++c) {
            picked.clear();
            for (std::size_t j : sel) picked.push_back(m.at(j, c));
            out[i * w + c] = canonical_sum(picked);
        }
    }
    return Tensor::make(n, w, std::move(out));
}

/// softmax(scores) @ V with canonical-order denominator and value sums.
inline Tensor hard_softmax_attend(const Tensor& scores, const Tensor& v) {
    const std::size_t n = scores.rows(), w = v.cols();
    std::vector<double> out(n * w, 0.0);
    std::vector<double> terms(scores.cols());
    for (std::size_t i = 0; i < n; ++i) {
        double mx = scores.at(i, 0);
        for (std::size_t j = 1; j < scores.cols(); ++j) mx = std::max(mx, scores.at(i, j));
        std::vector<double> weights(scores.cols());
        for (std::size_t j = 0; j < scores.cols(); ++j) weights[j] = std::exp(scores.at(i, j) - mx);
        const double denom = canonical_sum(weights);
        for (std::size_t j = 0; j < weights.size(); ++j) weights[j] /= denom;
        for (std::size_t c = 0; c < w; ++c) {
            for (std::size_t j = 0; j < weights.size(); ++j) terms[j] = weights[j] * v.at(j, c);
            out[i * w + c] = canonical_sum(terms);
        }
    }
    return Tensor::make(n, w, std::move(out));
}

/// 0/1 matrix that zeroes attention rows and columns of padded objects.
inline Tensor pad_mask_matrix(const Batch& b, std::size_t sample) {
    const std::size_t n = b.max_objects;
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m[i * n + j] = (b.mask[sample * n + i] && b.mask[sample * n + j]) ? 1.0 : 0.0;
    return Tensor::make(n, n, std::move(m));
}

inline bool sample_fully_real(const Batch& b, std::size_t sample) {
    return b.object_counts[sample] == b.max_objects;
}

} // namespace modeldetail

// ---------------------------------------------------------------------------
// Shared building blocks (also exposed for tests and interpretation)
// ---------------------------------------------------------------------------

/// Per-object 4-bit symbols from raw feature rows (shared-weight MLP +
/// Gumbel-sigmoid). Identical rows produce identical logits.
inline Tensor encode(const ModelCheckpoint& ckpt, const Tensor& features,
                     DiscretizationMode mode, Rng& rng) {
    if (ckpt.arch == "deepsym")
        throw ContractError("encode: deepsym has no per-object encoder");
    Tensor logits = mlp_forward(ckpt.params, "enc", features, ckpt.encoder_widths());
    return gumbel_sigmoid(logits, ckpt.cfg(mode), rng);
}

/// Pre-discretization attention logits Q_j K_j^T / sqrt(d) for one sample,
/// one tensor per head.
inline std::vector<Tensor> attention_logits(const ModelCheckpoint& ckpt, const Tensor& features) {
    if (ckpt.arch != "relational")
        throw ContractError("attention_logits: checkpoint is not a relational model");
    const std::size_t d = ckpt.hidden;
    Tensor trunk = mlp_forward(ckpt.params, "attn.trunk", features, ckpt.trunk_widths(), true);
    Tensor q = add_bias(matmul(trunk, ckpt.params.at("attn.q.w")), ckpt.params.at("attn.q.b"));
    Tensor k = add_bias(matmul(trunk, ckpt.params.at("attn.k.w")), ckpt.params.at("attn.k.b"));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<Tensor> logits;
    for (std::size_t h = 0; h < ckpt.heads; ++h) {
        Tensor qh = slice_cols(q, h * d, (h + 1) * d);
        Tensor kh = slice_cols(k, h * d, (h + 1) * d);
        logits.push_back(scale(matmul(qh, transpose(kh)), inv_sqrt_d));
    }
    return logits;
}

/// Discrete relational symbols A_1..A_k for one sample.
inline std::vector<Tensor> attention_weights(const ModelCheckpoint& ckpt, const Tensor& features,
                                             DiscretizationMode mode, Rng& rng) {
    std::vector<Tensor> out;
    for (Tensor& logits : attention_logits(ckpt, features))
        out.push_back(gumbel_sigmoid(logits, ckpt.cfg(mode), rng));
    return out;
}

/// Eqs-style aggregation for one sample: z_bar = [z, a] per object, M =
/// mlp(z_bar), per head H_j = A_j M, fused h = concat over heads.
inline Tensor aggregate(const ModelCheckpoint& ckpt, const Tensor& symbols,
                        const std::vector<Tensor>& relations, const Tensor& action_rows,
                        DiscretizationMode mode) {
    if (relations.size() != ckpt.heads)
        throw ShapeError("aggregate: expected " + std::to_string(ckpt.heads) + " relation heads");
    const std::size_t n = symbols.rows();
    for (const Tensor& a : relations)
        if (a.rows() != n || a.cols() != n)
            throw ShapeError("aggregate: relation " + a.shape_string() +
                             " does not match symbol rows " + symbols.shape_string());
    Tensor zbar = concat_cols({symbols, action_rows});
    Tensor m = mlp_forward(ckpt.params, "agg", zbar, ckpt.aggregate_widths());
    std::vector<Tensor> parts;
    for (const Tensor& a : relations)
        parts.push_back(mode == DiscretizationMode::HardThreshold
                            ? modeldetail::hard_select_matmul(a, m)
                            : matmul(a, m));
    return concat_cols(parts);
}

// ---------------------------------------------------------------------------
// Architectures
// ---------------------------------------------------------------------------

struct ForwardResult {
    Tensor effects; // (samples*max_objects) x 6, padded rows meaningless
    Tensor symbols; // per-object bits; deepsym: samples x (bits*max_objects)
    std::vector<std::vector<Tensor>> relations; // [sample][head], relational only
};

/// Encoder and attention run in parallel from raw features; the aggregation
/// fuses symbols with discrete relations; a per-object decoder emits 6-dim
/// effects. Deterministic in hard mode.
inline ForwardResult relational_forward(const ModelCheckpoint& ckpt, const Batch& batch,
                                        DiscretizationMode mode, Rng& rng) {
    if (ckpt.arch != "relational")
        throw ContractError("relational_forward: checkpoint arch is " + ckpt.arch);
    const std::size_t B = batch.samples, N = batch.max_objects;
    const GumbelConfig cfg = ckpt.cfg(mode);

    Tensor feats = batch_features(batch);
    Tensor z = gumbel_sigmoid(mlp_forward(ckpt.params, "enc", feats, ckpt.encoder_widths()),
                              cfg, rng);

    const std::size_t d = ckpt.hidden;
    Tensor trunk = mlp_forward(ckpt.params, "attn.trunk", feats, ckpt.trunk_widths(), true);
    Tensor q = add_bias(matmul(trunk, ckpt.params.at("attn.q.w")), ckpt.params.at("attn.q.b"));
    Tensor k = add_bias(matmul(trunk, ckpt.params.at("attn.k.w")), ckpt.params.at("attn.k.b"));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    ForwardResult out;
    out.symbols = z;
    out.relations.resize(B);
    Tensor action_rows = batch_action_rows(batch);
    std::vector<Tensor> sample_rows;
    sample_rows.reserve(B);
    for (std::size_t s = 0; s < B; ++s) {
        Tensor qs = slice_rows(q, s * N, (s + 1) * N);
        Tensor ks = slice_rows(k, s * N, (s + 1) * N);
        std::vector<Tensor> rel;
        for (std::size_t h = 0; h < ckpt.heads; ++h) {
            Tensor qh = slice_cols(qs, h * d, (h + 1) * d);
            Tensor kh = slice_cols(ks, h * d, (h + 1) * d);
            Tensor a = gumbel_sigmoid(scale(matmul(qh, transpose(kh)), inv_sqrt_d), cfg, rng);
            if (!modeldetail::sample_fully_real(batch, s))
                a = mul(a, modeldetail::pad_mask_matrix(batch, s));
            rel.push_back(a);
        }
        Tensor zs = slice_rows(z, s * N, (s + 1) * N);
        Tensor as = slice_rows(action_rows, s * N, (s + 1) * N);
        sample_rows.push_back(aggregate(ckpt, zs, rel, as, mode));
        out.relations[s] = std::move(rel);
    }
    Tensor fused = concat_rows(sample_rows);
    out.effects = mlp_forward(ckpt.params, "dec", fused, ckpt.decoder_widths());
    return out;
}

/// Baseline with softmax attention over the discrete object symbols
/// (attention weights stay continuous).
inline ForwardResult attentive_forward(const ModelCheckpoint& ckpt, const Batch& batch,
                                       DiscretizationMode mode, Rng& rng) {
    if (ckpt.arch != "attentive")
        throw ContractError("attentive_forward: checkpoint arch is " + ckpt.arch);
    const std::size_t B = batch.samples, N = batch.max_objects, d = ckpt.hidden;
    const GumbelConfig cfg = ckpt.cfg(mode);

    Tensor feats = batch_features(batch);
    Tensor z = gumbel_sigmoid(mlp_forward(ckpt.params, "enc", feats, ckpt.encoder_widths()),
                              cfg, rng);
    Tensor q = add_bias(matmul(z, ckpt.params.at("attn.q.w")), ckpt.params.at("attn.q.b"));
    Tensor k = add_bias(matmul(z, ckpt.params.at("attn.k.w")), ckpt.params.at("attn.k.b"));
    Tensor v = add_bias(matmul(z, ckpt.params.at("attn.v.w")), ckpt.params.at("attn.v.b"));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<Tensor> sample_rows;
    sample_rows.reserve(B);
    for (std::size_t s = 0; s < B; ++s) {
        Tensor qs = slice_rows(q, s * N, (s + 1) * N);
        Tensor ks = slice_rows(k, s * N, (s + 1) * N);
        Tensor vs = slice_rows(v, s * N, (s + 1) * N);
        std::vector<Tensor> heads;
        for (std::size_t h = 0; h < ckpt.heads; ++h) {
            Tensor qh = slice_cols(qs, h * d, (h + 1) * d);
            Tensor kh = slice_cols(ks, h * d, (h + 1) * d);
            Tensor vh = slice_cols(vs, h * d, (h + 1) * d);
            Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_d);
            if (!modeldetail::sample_fully_real(batch, s)) {
                // padded objects must receive no attention mass
                std::vector<double> bias(N * N, 0.0);
                for (std::size_t i = 0; i < N; ++i)
                    for (std::size_t j = 0; j < N; ++j)
                        if (!batch.mask[s * N + j]) bias[i * N + j] = -1e30;
                scores = add(scores, Tensor::make(N, N, std::move(bias)));
            }
            heads.push_back(mode == DiscretizationMode::HardThreshold
                                ? modeldetail::hard_softmax_attend(scores, vh)
                                : matmul(softmax_rows(scores), vh));
        }
        sample_rows.push_back(concat_cols(heads));
    }
    Tensor attended = concat_rows(sample_rows);
    Tensor dec_in = concat_cols({attended, batch_action_rows(batch)});

    ForwardResult out;
    out.symbols = z;
    out.effects = mlp_forward(ckpt.params, "dec", dec_in, ckpt.decoder_widths());
    return out;
}

namespace modeldetail {

/// DeepSym input order: grasped object first, then the release target, then
/// the rest by planar distance to the grasped block (ties by x, then y).
inline std::vector<std::size_t> deepsym_order(const Batch& b, std::size_t sample) {
    const std::size_t n = b.object_counts[sample];
    const std::size_t base = sample * b.max_objects;
    std::size_t grasped = n, target = n;
    for (std::size_t i = 0; i < n; ++i) {
        const double* f = &b.features[(base + i) * 6];
        if (f[2] == 0.0 && f[3] == 0.0 && f[4] == 0.0) grasped = i;
        if (f[5] == 1.0) target = i;
    }
    if (grasped >= n || target >= n)
        throw ContractError("deepsym_order: sample misses grasped/target marks");
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
        if (i != grasped && i != target) rest.push_back(i);
    std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t c) {
        const double* fa = &b.features[(base + a) * 6];
        const double* fc = &b.features[(base + c) * 6];
        const double da = fa[2] * fa[2] + fa[3] * fa[3];
        const double dc = fc[2] * fc[2] + fc[3] * fc[3];
        if (da != dc) return da < dc;
        if (fa[2] != fc[2]) return fa[2] < fc[2];
        return fa[3] < fc[3];
    });
    std::vector<std::size_t> order{grasped, target};
    order.insert(order.end(), rest.begin(), rest.end());
    return order;
}

} // namespace modeldetail

/// Fixed-capacity baseline: object rows are reordered grasped-first, packed
/// into one flat vector padded to max_objects, squeezed through a global
/// discrete bottleneck, and decoded back to per-object effects.
inline ForwardResult deepsym_forward(const ModelCheckpoint& ckpt, const Batch& batch,
                                     DiscretizationMode mode, Rng& rng) {
    if (ckpt.arch != "deepsym")
        throw ContractError("deepsym_forward: checkpoint arch is " + ckpt.arch);
    const std::size_t B = batch.samples, N = batch.max_objects, cap = ckpt.max_objects;
    for (std::size_t s = 0; s < B; ++s)
        if (batch.object_counts[s] > cap)
            throw ContractError("deepsym_forward: " + std::to_string(batch.object_counts[s]) +
                                " objects exceed the configured capacity " + std::to_string(cap));
    const GumbelConfig cfg = ckpt.cfg(mode);

    Tensor feats = batch_features(batch);
    Tensor feats_pad = concat_rows({feats, Tensor::zeros(1, 6)});
    const std::size_t zero_row = B * N;

    std::vector<std::vector<std::size_t>> orders(B);
    std::vector<std::size_t> gather_in;
    gather_in.reserve(B * cap);
    for (std::size_t s = 0; s < B; ++s) {
        orders[s] = modeldetail::deepsym_order(batch, s);
        for (std::size_t slot = 0; slot < cap; ++slot)
            gather_in.push_back(slot < orders[s].size() ? s * N + orders[s][slot] : zero_row);
    }
    Tensor flat = reshape(gather_rows(feats_pad, gather_in), B, 6 * cap);
    Tensor bits = gumbel_sigmoid(mlp_forward(ckpt.params, "enc", flat, ckpt.encoder_widths()),
                                 cfg, rng);
    Tensor dec_in = concat_cols({bits, batch_actions(batch)});
    Tensor dec_out = mlp_forward(ckpt.params, "dec", dec_in, ckpt.decoder_widths());
    Tensor dec_rows = concat_rows({reshape(dec_out, B * cap, 6), Tensor::zeros(1, 6)});

    // scatter canonical slots back to the original object order
    std::vector<std::size_t> gather_back(B * N, B * cap);
    for (std::size_t s = 0; s < B; ++s)
        for (std::size_t slot = 0; slot < orders[s].size(); ++slot)
            gather_back[s * N + orders[s][slot]] = s * cap + slot;
    ForwardResult out;
    out.effects = gather_rows(dec_rows, gather_back);
    out.symbols = bits;
    return out;
}

inline ForwardResult model_forward(const ModelCheckpoint& ckpt, const Batch& batch,
                                   DiscretizationMode mode, Rng& rng) {
    if (ckpt.arch == "relational") return relational_forward(ckpt, batch, mode, rng);
    if (ckpt.arch == "attentive") return attentive_forward(ckpt, batch, mode, rng);
    if (ckpt.arch == "deepsym") return deepsym_forward(ckpt, batch, mode, rng);
    throw ContractError("unknown architecture tag: " + ckpt.arch);
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// (1/M) * sum over batch, objects and dims of squared error; padded objects
/// contribute nothing; M is the number of records in the batch.
inline Tensor masked_mse_loss(const Tensor& predicted, const Tensor& target, const Tensor& mask6,
                              std::size_t samples) {
    if (samples == 0) throw ContractError("loss over an empty batch");
    detail::require_same_shape(predicted, target, "loss");
    detail::require_same_shape(predicted, mask6, "loss mask");
    return scale(sum(square(mul(sub(predicted, target), mask6))),
                 1.0 / static_cast<double>(samples));
}

inline Tensor model_loss(const Tensor& predicted, const Batch& batch) {
    return masked_mse_loss(predicted, batch_effects(batch), batch_mask6(batch), batch.samples);
}

} // namespace relsym
