#include "model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace timebridge {

namespace {

std::int64_t largest_odd_leq(std::int64_t n) { return (n % 2 == 0) ? n - 1 : n; }

// Detrending kernel for token sequences in embedding space (second-stage
// Q/K branches): the configured kernel clipped to the token count, kept odd.
std::int64_t token_kernel(std::int64_t configured, std::int64_t count) {
    return largest_odd_leq(std::min(configured, count));
}

}  // namespace

std::string channel_mode_name(ChannelMode m) { return m == ChannelMode::ci ? "ci" : "cd"; }

ChannelMode channel_mode_from_name(const std::string& s) {
    if (s == "ci") return ChannelMode::ci;
    if (s == "cd") return ChannelMode::cd;
    throw config_error("unknown channel mode \"" + s + "\" (expected ci|cd)");
}

std::string block_order_name(BlockOrder o) {
    return o == BlockOrder::integrated_first ? "integrated_first" : "cointegrated_first";
}

BlockOrder block_order_from_name(const std::string& s) {
    if (s == "integrated_first") return BlockOrder::integrated_first;
    if (s == "cointegrated_first") return BlockOrder::cointegrated_first;
    throw config_error("unknown block order \"" + s +
                       "\" (expected integrated_first|cointegrated_first)");
}

std::int64_t ModelConfig::resolved_detrend_kernel() const {
    if (detrend_kernel != 0) return detrend_kernel;
    return patch_len >= 25 ? 25 : largest_odd_leq(patch_len);
}

std::int64_t ModelConfig::embed_patch_len() const {
    return block_order == BlockOrder::integrated_first ? patch_len : input_len / resolved_m();
}

std::int64_t ModelConfig::embed_patch_count() const {
    return block_order == BlockOrder::integrated_first ? num_patches() : resolved_m();
}

std::int64_t ModelConfig::output_token_count() const {
    return block_order == BlockOrder::integrated_first ? resolved_m() : num_patches();
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw config_error("model config: " + msg); };
    if (channels < 1) fail("channels must be >= 1");
    if (input_len < 1) fail("input_len must be >= 1");
    if (output_len < 1) fail("output_len must be >= 1");
    if (patch_len < 1) fail("patch_len must be >= 1");
    if (input_len < patch_len) fail("input_len must be >= patch_len");
    const std::int64_t n = num_patches();
    const std::int64_t m = resolved_m();
    if (m < 1 || m > n)
        fail("downsampled_patches must satisfy 1 <= M <= N, got M=" + std::to_string(m) +
             " N=" + std::to_string(n));
    if (hidden_dim < 1) fail("hidden_dim must be >= 1");
    if (ff_dim < 1) fail("ff_dim must be >= 1");
    if (n_heads < 1) fail("n_heads must be >= 1");
    if (hidden_dim % n_heads != 0)
        fail("hidden_dim " + std::to_string(hidden_dim) + " not divisible by n_heads " +
             std::to_string(n_heads));
    if (n_integrated_layers < 0 || n_cointegrated_layers < 0) fail("layer counts must be >= 0");
    if (n_integrated_layers == 0 && n_cointegrated_layers == 0)
        fail("at least one attention stage must have layers");
    const std::int64_t kernel = resolved_detrend_kernel();
    if (kernel < 1 || kernel % 2 == 0)
        fail("detrend_kernel must be a positive odd integer, got " + std::to_string(kernel));
    if (kernel > patch_len)
        fail("detrend_kernel " + std::to_string(kernel) + " exceeds patch_len " +
             std::to_string(patch_len));
}

// ---------------------------------------------------------------------------
// parameters

namespace {

void add_matrix(ModelParams& p, Rng& rng, const std::string& name, std::int64_t rows,
                std::int64_t cols) {
    Tensor t({rows, cols});
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (std::int64_t i = 0; i < t.numel(); ++i) t.at(i) = scale * rng.normal();
    p.params.push_back({name, std::move(t)});
}

void add_vector(ModelParams& p, const std::string& name, std::int64_t len, double fill) {
    p.params.push_back({name, Tensor::full({len}, fill)});
}

void add_encoder_layer(ModelParams& p, Rng& rng, const std::string& prefix,
                       const ModelConfig& c) {
    add_matrix(p, rng, prefix + ".attn.wq", c.hidden_dim, c.hidden_dim);
    add_matrix(p, rng, prefix + ".attn.wk", c.hidden_dim, c.hidden_dim);
    add_matrix(p, rng, prefix + ".attn.wv", c.hidden_dim, c.hidden_dim);
    add_matrix(p, rng, prefix + ".attn.wo", c.hidden_dim, c.hidden_dim);
    add_matrix(p, rng, prefix + ".mlp.w1", c.hidden_dim, c.ff_dim);
    add_matrix(p, rng, prefix + ".mlp.w2", c.ff_dim, c.hidden_dim);
    add_vector(p, prefix + ".ln1.gain", c.hidden_dim, 1.0);
    add_vector(p, prefix + ".ln1.bias", c.hidden_dim, 0.0);
    add_vector(p, prefix + ".ln2.gain", c.hidden_dim, 1.0);
    add_vector(p, prefix + ".ln2.bias", c.hidden_dim, 0.0);
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& c, std::uint64_t seed) {
    c.validate();
    Rng rng(derive_seed(seed, 0xA11C));
    ModelParams p;
    add_matrix(p, rng, "embed.weight", c.embed_patch_len(), c.hidden_dim);
    add_vector(p, "embed.bias", c.hidden_dim, 0.0);
    for (int l = 0; l < c.n_integrated_layers; ++l)
        add_encoder_layer(p, rng, "integrated." + std::to_string(l), c);
    // patch-axis map runs embed-count -> output-count tokens
    add_matrix(p, rng, "resample.map", c.embed_patch_count(), c.output_token_count());
    add_matrix(p, rng, "resample.attn.wq", c.hidden_dim, c.hidden_dim);
    add_matrix(p, rng, "resample.attn.wk", c.hidden_dim, c.hidden_dim);
    add_matrix(p, rng, "resample.attn.wv", c.hidden_dim, c.hidden_dim);
    add_matrix(p, rng, "resample.attn.wo", c.hidden_dim, c.hidden_dim);
    for (int l = 0; l < c.n_cointegrated_layers; ++l)
        add_encoder_layer(p, rng, "cointegrated." + std::to_string(l), c);
    add_matrix(p, rng, "head.weight", c.output_token_count() * c.hidden_dim, c.output_len);
    add_vector(p, "head.bias", c.output_len, 0.0);
    return p;
}

Tensor& ModelParams::find(const std::string& name) {
    for (auto& p : params)
        if (p.name == name) return p.value;
    throw contract_error("unknown parameter \"" + name + "\"");
}

const Tensor& ModelParams::find(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return p.value;
    throw contract_error("unknown parameter \"" + name + "\"");
}

std::int64_t ModelParams::total_coefficients() const {
    std::int64_t n = 0;
    for (const auto& p : params) n += p.value.numel();
    return n;
}

BoundParams bind_params(Tape& tape, const ModelParams& params) {
    BoundParams bound;
    bound.nodes.reserve(params.params.size());
    for (std::size_t i = 0; i < params.params.size(); ++i) {
        bound.nodes.push_back(tape.leaf(params.params[i].value));
        bound.index.emplace(params.params[i].name, i);
    }
    return bound;
}

Var BoundParams::at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw contract_error("unbound parameter \"" + name + "\"");
    return nodes[it->second];
}

// ---------------------------------------------------------------------------
// pieces

Tensor patchify(const Tensor& series, std::int64_t patch_len) {
    if (series.ndim() != 2) {
        throw dimension_error("patchify: expected [C x I], got " + shape_str(series.shape()));
    }
    const std::int64_t C = series.dim(0), I = series.dim(1);
    if (patch_len < 1 || I < patch_len) {
        throw config_error("patchify: input length " + std::to_string(I) +
                           " shorter than patch length " + std::to_string(patch_len));
    }
    const std::int64_t N = I / patch_len;
    Tensor out({C, N, patch_len});
    for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t n = 0; n < N; ++n)
            for (std::int64_t s = 0; s < patch_len; ++s)
                out.at((c * N + n) * patch_len + s) = series.at(c, n * patch_len + s);
    return out;
}

Tensor detrend_patch(const Tensor& patch, std::int64_t kernel) {
    if (patch.ndim() != 1) {
        throw dimension_error("detrend_patch: expected a 1-D patch, got " +
                              shape_str(patch.shape()));
    }
    Tensor trend = avg_pool_tensor(patch, 0, kernel);
    Tensor out(patch.shape());
    for (std::int64_t i = 0; i < patch.numel(); ++i) out.at(i) = patch.at(i) - trend.at(i);
    return out;
}

Tensor detrend_patches(const Tensor& raw_patches, std::int64_t kernel) {
    if (raw_patches.ndim() != 3) {
        throw dimension_error("detrend_patches: expected [C x N x S], got " +
                              shape_str(raw_patches.shape()));
    }
    // axis 2 is the within-patch time axis
    Tensor trend = avg_pool_tensor(raw_patches, 2, kernel);
    Tensor out(raw_patches.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) = raw_patches.at(i) - trend.at(i);
    return out;
}

Var multi_head_attention(Tape& t, Var q_in, Var k_in, Var v_in, const AttentionWeights& w,
                         int n_heads, ForwardTrace* trace) {
    const std::int64_t D = t.value(q_in).dim(1);
    if (D % n_heads != 0) {
        throw config_error("attention: hidden dim " + std::to_string(D) +
                           " not divisible by " + std::to_string(n_heads) + " heads");
    }
    const std::int64_t dh = D / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Var q = t.matmul(q_in, w.wq);
    Var k = t.matmul(k_in, w.wk);
    Var v = t.matmul(v_in, w.wv);
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        Var qh = t.slice_cols(q, h * dh, (h + 1) * dh);
        Var kh = t.slice_cols(k, h * dh, (h + 1) * dh);
        Var vh = t.slice_cols(v, h * dh, (h + 1) * dh);
        Var scores = t.scale(t.matmul(qh, t.transpose(kh)), scale);
        Var weights = t.softmax(scores, 1);
        if (trace) trace->attention_weights.push_back(weights);
        heads.push_back(t.matmul(weights, vh));
    }
    Var merged = n_heads == 1 ? heads[0] : t.concat_cols(heads);
    return t.matmul(merged, w.wo);
}

Var encoder_block(Tape& t, Var tokens, Var qk_src, const EncoderLayerWeights& w, int n_heads,
                  ForwardTrace* trace) {
    Var attended = multi_head_attention(t, qk_src, qk_src, tokens, w.attn, n_heads, trace);
    Var h = t.layer_norm(t.add(tokens, attended), 1, kModelLayerNormEps, w.ln1_gain, w.ln1_bias);
    Var mlp = t.matmul(t.gelu(t.matmul(h, w.mlp_w1)), w.mlp_w2);
    return t.layer_norm(t.add(h, mlp), 1, kModelLayerNormEps, w.ln2_gain, w.ln2_bias);
}

Var resample_tokens(Tape& t, Var tokens, Var patch_map, const AttentionWeights& w, int n_heads,
                    ForwardTrace* trace) {
    Var query_tokens = t.matmul(t.transpose(patch_map), tokens);
    return multi_head_attention(t, query_tokens, tokens, tokens, w, n_heads, trace);
}

Var project_tokens(Tape& t, const std::vector<Var>& channel_tokens, Var head_weight,
                   Var head_bias) {
    if (channel_tokens.empty()) throw dimension_error("project_tokens: no channels");
    const std::int64_t flat = t.value(channel_tokens[0]).numel();
    std::vector<Var> outs;
    outs.reserve(channel_tokens.size());
    for (Var chan : channel_tokens)
        outs.push_back(t.add_rowvec(t.matmul(t.reshape(chan, {1, flat}), head_weight), head_bias));
    return channel_tokens.size() == 1 ? outs[0] : t.concat_rows(outs);
}

// ---------------------------------------------------------------------------
// forward

namespace {

AttentionWeights attn_weights(const BoundParams& b, const std::string& prefix) {
    return {b.at(prefix + ".wq"), b.at(prefix + ".wk"), b.at(prefix + ".wv"),
            b.at(prefix + ".wo")};
}

EncoderLayerWeights layer_weights(const BoundParams& b, const std::string& prefix) {
    EncoderLayerWeights w;
    w.attn = attn_weights(b, prefix + ".attn");
    w.mlp_w1 = b.at(prefix + ".mlp.w1");
    w.mlp_w2 = b.at(prefix + ".mlp.w2");
    w.ln1_gain = b.at(prefix + ".ln1.gain");
    w.ln1_bias = b.at(prefix + ".ln1.bias");
    w.ln2_gain = b.at(prefix + ".ln2.gain");
    w.ln2_bias = b.at(prefix + ".ln2.bias");
    return w;
}

// Shared-weight embedding of per-channel raw patches: [N x S] . W + b.
std::vector<Var> embed_channels(Tape& t, const Tensor& raw, Var weight, Var bias) {
    const std::int64_t C = raw.dim(0), N = raw.dim(1), S = raw.dim(2);
    std::vector<Var> tokens;
    tokens.reserve(static_cast<std::size_t>(C));
    for (std::int64_t c = 0; c < C; ++c) {
        Tensor mat({N, S});
        for (std::int64_t i = 0; i < N * S; ++i) mat.at(i) = raw.at(c * N * S + i);
        tokens.push_back(t.add_rowvec(t.matmul(t.constant(std::move(mat)), weight), bias));
    }
    return tokens;
}

// Detrended copies of per-channel token matrices along the token axis
// (embedding-space analogue of the raw patch detrend).
std::vector<Var> detrend_token_axis(Tape& t, const std::vector<Var>& tokens,
                                    std::int64_t kernel) {
    std::vector<Var> out;
    out.reserve(tokens.size());
    for (Var v : tokens) out.push_back(t.sub(v, t.avg_pool(v, 0, kernel)));
    return out;
}

// Intra-channel stack. qk per-channel sources stay fixed across layers while
// the value tokens evolve.
void run_intra_stage(Tape& t, const ModelConfig& c, const BoundParams& b,
                     std::vector<Var>& tokens, const std::vector<Var>& qk_src,
                     ForwardTrace* trace) {
    const std::int64_t C = c.channels;
    if (c.integrated_mode == ChannelMode::ci) {
        for (int l = 0; l < c.n_integrated_layers; ++l) {
            const EncoderLayerWeights w = layer_weights(b, "integrated." + std::to_string(l));
            for (std::int64_t ch = 0; ch < C; ++ch)
                tokens[static_cast<std::size_t>(ch)] =
                    encoder_block(t, tokens[static_cast<std::size_t>(ch)],
                                  qk_src[static_cast<std::size_t>(ch)], w, c.n_heads, trace);
        }
        return;
    }
    // channel-dependent ablation: one attention over all channels' tokens
    const std::int64_t rows = t.value(tokens[0]).dim(0);
    Var all = C == 1 ? tokens[0] : t.concat_rows(tokens);
    Var all_qk = C == 1 ? qk_src[0] : t.concat_rows(qk_src);
    for (int l = 0; l < c.n_integrated_layers; ++l)
        all = encoder_block(t, all, all_qk, layer_weights(b, "integrated." + std::to_string(l)),
                            c.n_heads, trace);
    for (std::int64_t ch = 0; ch < C; ++ch)
        tokens[static_cast<std::size_t>(ch)] = t.slice_rows(all, ch * rows, (ch + 1) * rows);
}

// Cross-channel stack over per-position [C x D] slices.
void run_cross_stage(Tape& t, const ModelConfig& c, const BoundParams& b,
                     std::vector<Var>& tokens, ForwardTrace* trace) {
    if (c.n_cointegrated_layers == 0) return;
    const std::int64_t C = c.channels;
    const std::int64_t count = t.value(tokens[0]).dim(0);

    std::vector<Var> qk_channels = tokens;
    if (c.cointegrated_norm) {
        // ablation: remove the per-channel level/trend along the position
        // axis before forming Q/K (value tokens keep it)
        qk_channels = detrend_token_axis(t, tokens, token_kernel(c.resolved_detrend_kernel(), count));
    }

    if (c.cointegrated_mode == ChannelMode::ci) {
        // ablation: per-channel attention over positions
        for (int l = 0; l < c.n_cointegrated_layers; ++l) {
            const EncoderLayerWeights w = layer_weights(b, "cointegrated." + std::to_string(l));
            for (std::int64_t ch = 0; ch < C; ++ch)
                tokens[static_cast<std::size_t>(ch)] =
                    encoder_block(t, tokens[static_cast<std::size_t>(ch)],
                                  qk_channels[static_cast<std::size_t>(ch)], w, c.n_heads, trace);
        }
        return;
    }

    // default: attention across channels at each position
    auto gather_position = [&](const std::vector<Var>& chans, std::int64_t n) {
        if (C == 1) return t.slice_rows(chans[0], n, n + 1);
        std::vector<Var> rows;
        rows.reserve(static_cast<std::size_t>(C));
        for (std::int64_t ch = 0; ch < C; ++ch)
            rows.push_back(t.slice_rows(chans[static_cast<std::size_t>(ch)], n, n + 1));
        return t.concat_rows(rows);
    };

    std::vector<Var> positions, qk_positions;
    positions.reserve(static_cast<std::size_t>(count));
    qk_positions.reserve(static_cast<std::size_t>(count));
    for (std::int64_t n = 0; n < count; ++n) {
        positions.push_back(gather_position(tokens, n));
        qk_positions.push_back(c.cointegrated_norm ? gather_position(qk_channels, n)
                                                   : positions.back());
    }
    for (int l = 0; l < c.n_cointegrated_layers; ++l) {
        const EncoderLayerWeights w = layer_weights(b, "cointegrated." + std::to_string(l));
        for (std::int64_t n = 0; n < count; ++n)
            positions[static_cast<std::size_t>(n)] =
                encoder_block(t, positions[static_cast<std::size_t>(n)],
                              qk_positions[static_cast<std::size_t>(n)], w, c.n_heads, trace);
    }
    // back to channel-major matrices
    for (std::int64_t ch = 0; ch < C; ++ch) {
        if (count == 1) {
            tokens[static_cast<std::size_t>(ch)] = t.slice_rows(positions[0], ch, ch + 1);
            continue;
        }
        std::vector<Var> rows;
        rows.reserve(static_cast<std::size_t>(count));
        for (std::int64_t n = 0; n < count; ++n)
            rows.push_back(t.slice_rows(positions[static_cast<std::size_t>(n)], ch, ch + 1));
        tokens[static_cast<std::size_t>(ch)] = t.concat_rows(rows);
    }
}

}  // namespace

Var model_forward(Tape& t, const Tensor& series, const ModelConfig& c, const BoundParams& b,
                  ForwardTrace* trace) {
    c.validate();
    if (series.ndim() != 2 || series.dim(0) != c.channels || series.dim(1) != c.input_len) {
        throw dimension_error("forward: expected input [" + std::to_string(c.channels) + " x " +
                              std::to_string(c.input_len) + "], got " +
                              shape_str(series.shape()));
    }

    const std::int64_t embed_len = c.embed_patch_len();
    const std::int64_t embed_count = c.embed_patch_count();

    // patchify with the stage-appropriate patch length; keep exactly
    // embed_count patches (the floor rule can only over-produce)
    Tensor raw_full = patchify(series, embed_len);
    Tensor raw({c.channels, embed_count, embed_len});
    {
        const std::int64_t n_full = raw_full.dim(1);
        for (std::int64_t ch = 0; ch < c.channels; ++ch)
            for (std::int64_t n = 0; n < embed_count; ++n)
                for (std::int64_t s = 0; s < embed_len; ++s)
                    raw.at((ch * embed_count + n) * embed_len + s) =
                        raw_full.at((ch * n_full + n) * embed_len + s);
    }

    Var embed_w = b.at("embed.weight");
    Var embed_b = b.at("embed.bias");
    std::vector<Var> tokens = embed_channels(t, raw, embed_w, embed_b);

    const AttentionWeights resample_w = attn_weights(b, "resample.attn");
    Var patch_map = b.at("resample.map");

    if (c.block_order == BlockOrder::integrated_first) {
        if (c.n_integrated_layers > 0) {
            std::vector<Var> qk = tokens;
            if (c.integrated_norm) {
                // Q/K branch: detrend the raw patches, embed with the shared layer
                Tensor detrended = detrend_patches(raw, c.resolved_detrend_kernel());
                qk = embed_channels(t, detrended, embed_w, embed_b);
            }
            run_intra_stage(t, c, b, tokens, qk, trace);
        }
        for (auto& chan : tokens)
            chan = resample_tokens(t, chan, patch_map, resample_w, c.n_heads, trace);
        run_cross_stage(t, c, b, tokens, trace);
    } else {
        // cross-channel stage first on the coarse patches, then token
        // upsampling, then the intra-channel stage in embedding space
        run_cross_stage(t, c, b, tokens, trace);
        for (auto& chan : tokens)
            chan = resample_tokens(t, chan, patch_map, resample_w, c.n_heads, trace);
        if (c.n_integrated_layers > 0) {
            std::vector<Var> qk = tokens;
            if (c.integrated_norm) {
                qk = detrend_token_axis(
                    t, tokens, token_kernel(c.resolved_detrend_kernel(), c.output_token_count()));
            }
            run_intra_stage(t, c, b, tokens, qk, trace);
        }
    }

    return project_tokens(t, tokens, b.at("head.weight"), b.at("head.bias"));
}

Tensor forward_values(const Tensor& series, const ModelConfig& config,
                      const ModelParams& params) {
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    Var out = model_forward(tape, series, config, bound);
    return tape.value(out);
}

// ---------------------------------------------------------------------------
// checkpoint

namespace {

constexpr char kMagic[8] = {'T', 'B', 'C', 'K', 'P', 'T', '0', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    write_u32(os, static_cast<std::uint32_t>(v));
    write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw parse_error("checkpoint truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& is) {
    const std::uint64_t lo = read_u32(is);
    const std::uint64_t hi = read_u32(is);
    return lo | (hi << 32);
}

}  // namespace

std::string model_config_to_text(const ModelConfig& c) {
    std::ostringstream os;
    os << "channels = " << c.channels << "\n";
    os << "input_len = " << c.input_len << "\n";
    os << "output_len = " << c.output_len << "\n";
    os << "patch_len = " << c.patch_len << "\n";
    os << "downsampled_patches = " << c.downsampled_patches << "\n";
    os << "hidden_dim = " << c.hidden_dim << "\n";
    os << "ff_dim = " << c.ff_dim << "\n";
    os << "n_integrated_layers = " << c.n_integrated_layers << "\n";
    os << "n_cointegrated_layers = " << c.n_cointegrated_layers << "\n";
    os << "n_heads = " << c.n_heads << "\n";
    os << "detrend_kernel = " << c.detrend_kernel << "\n";
    os << "integrated_norm = " << (c.integrated_norm ? "true" : "false") << "\n";
    os << "cointegrated_norm = " << (c.cointegrated_norm ? "true" : "false") << "\n";
    os << "integrated_channel_mode = " << channel_mode_name(c.integrated_mode) << "\n";
    os << "cointegrated_channel_mode = " << channel_mode_name(c.cointegrated_mode) << "\n";
    os << "block_order = " << block_order_name(c.block_order) << "\n";
    return os.str();
}

ModelConfig model_config_from_text(const std::string& text) {
    ModelConfig c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        if (key == "channels") c.channels = std::stoll(val);
        else if (key == "input_len") c.input_len = std::stoll(val);
        else if (key == "output_len") c.output_len = std::stoll(val);
        else if (key == "patch_len") c.patch_len = std::stoll(val);
        else if (key == "downsampled_patches") c.downsampled_patches = std::stoll(val);
        else if (key == "hidden_dim") c.hidden_dim = std::stoll(val);
        else if (key == "ff_dim") c.ff_dim = std::stoll(val);
        else if (key == "n_integrated_layers") c.n_integrated_layers = std::stoi(val);
        else if (key == "n_cointegrated_layers") c.n_cointegrated_layers = std::stoi(val);
        else if (key == "n_heads") c.n_heads = std::stoi(val);
        else if (key == "detrend_kernel") c.detrend_kernel = std::stoll(val);
        else if (key == "integrated_norm") c.integrated_norm = (val == "true");
        else if (key == "cointegrated_norm") c.cointegrated_norm = (val == "true");
        else if (key == "integrated_channel_mode") c.integrated_mode = channel_mode_from_name(val);
        else if (key == "cointegrated_channel_mode") c.cointegrated_mode = channel_mode_from_name(val);
        else if (key == "block_order") c.block_order = block_order_from_name(val);
        else throw parse_error("checkpoint config: unknown key \"" + key + "\"");
    }
    c.validate();
    return c;
}

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const ModelParams& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    const std::string cfg = model_config_to_text(config);
    write_u32(os, static_cast<std::uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_u32(os, static_cast<std::uint32_t>(params.params.size()));
    for (const auto& p : params.params) {
        write_u32(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u32(os, static_cast<std::uint32_t>(p.value.ndim()));
        for (auto d : p.value.shape()) write_u64(os, static_cast<std::uint64_t>(d));
        os.write(reinterpret_cast<const char*>(p.value.data()),
                 static_cast<std::streamsize>(p.value.numel() * sizeof(double)));
    }
    if (!os) throw io_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw parse_error("not a checkpoint file: " + path);
    }
    const std::uint32_t cfg_len = read_u32(is);
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), cfg_len);
    if (!is) throw parse_error("checkpoint truncated");
    Checkpoint ck;
    ck.config = model_config_from_text(cfg);
    const std::uint32_t count = read_u32(is);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const std::uint32_t ndim = read_u32(is);
        Shape shape(ndim);
        for (auto& d : shape) d = static_cast<std::int64_t>(read_u64(is));
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!is) throw parse_error("checkpoint truncated in parameter \"" + name + "\"");
        ck.params.params.push_back({std::move(name), std::move(t)});
    }
    // shape consistency against the embedded config
    const ModelParams reference = ModelParams::init(ck.config, 0);
    if (reference.size() != ck.params.size()) {
        throw parse_error("checkpoint parameter count does not match its config");
    }
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (reference.params[i].name != ck.params.params[i].name ||
            reference.params[i].value.shape() != ck.params.params[i].value.shape()) {
            throw parse_error("checkpoint parameter \"" + ck.params.params[i].name +
                              "\" does not match its config");
        }
    }
    return ck;
}

}  // namespace timebridge
