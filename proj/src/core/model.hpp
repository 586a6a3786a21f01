#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tape.hpp"
#include "tensor.hpp"

namespace timebridge {

enum class ChannelMode { ci, cd };
enum class BlockOrder { integrated_first, cointegrated_first };

std::string channel_mode_name(ChannelMode m);
ChannelMode channel_mode_from_name(const std::string& s);
std::string block_order_name(BlockOrder o);
BlockOrder block_order_from_name(const std::string& s);

// Architecture hyperparameters. The patch count is derived, never stored:
// N = floor(input_len / patch_len).
struct ModelConfig {
    std::int64_t channels = 1;             // C
    std::int64_t input_len = 96;           // I
    std::int64_t output_len = 24;          // O
    std::int64_t patch_len = 8;            // S
    std::int64_t downsampled_patches = 0;  // M; 0 resolves to N
    std::int64_t hidden_dim = 64;          // D
    std::int64_t ff_dim = 128;
    int n_integrated_layers = 1;
    int n_cointegrated_layers = 1;
    int n_heads = 8;
    std::int64_t detrend_kernel = 0;  // 0 = auto: 25 when S >= 25, else largest odd <= S
    bool integrated_norm = true;       // detrended Q/K branch in the intra-channel stack
    bool cointegrated_norm = false;    // detrended Q/K branch in the cross-channel stack
    ChannelMode integrated_mode = ChannelMode::ci;
    ChannelMode cointegrated_mode = ChannelMode::cd;
    BlockOrder block_order = BlockOrder::integrated_first;

    std::int64_t num_patches() const { return input_len / patch_len; }  // N
    std::int64_t resolved_m() const {
        return downsampled_patches == 0 ? num_patches() : downsampled_patches;
    }
    std::int64_t resolved_detrend_kernel() const;

    // Patch geometry actually used by the embedding, which depends on the
    // stage order: the first attention stage consumes the embedded patches
    // directly, the second consumes the resampled tokens.
    std::int64_t embed_patch_len() const;
    std::int64_t embed_patch_count() const;
    std::int64_t output_token_count() const;

    void validate() const;  // throws config_error with the offending field
};

struct Parameter {
    std::string name;
    Tensor value;
};

// Flat, ordered, named parameter store. Order is fixed by construction and
// shared by the optimizer, the gradient bookkeeping and the checkpoint file.
struct ModelParams {
    std::vector<Parameter> params;

    static ModelParams init(const ModelConfig& config, std::uint64_t seed);

    Tensor& find(const std::string& name);
    const Tensor& find(const std::string& name) const;
    std::size_t size() const { return params.size(); }
    std::int64_t total_coefficients() const;
};

// Tape bindings of every parameter, aligned with ModelParams order.
struct BoundParams {
    std::vector<Var> nodes;
    std::map<std::string, std::size_t> index;

    Var at(const std::string& name) const;
};

BoundParams bind_params(Tape& tape, const ModelParams& params);

// Optional instrumentation: attention weight matrices recorded during a
// forward pass.
struct ForwardTrace {
    std::vector<Var> attention_weights;  // rows sum to 1 for every entry
};

// -- model pieces ------------------------------------------------------------

// Splits [C x I] into non-overlapping patches [C x N x S]; a trailing
// remainder shorter than S is dropped.
Tensor patchify(const Tensor& series, std::int64_t patch_len);

// p - moving_average(p) with replicate padding; kernel odd and <= len(p).
Tensor detrend_patch(const Tensor& patch, std::int64_t kernel);

// Applies detrend_patch to every patch of a [C x N x S] block.
Tensor detrend_patches(const Tensor& raw_patches, std::int64_t kernel);

struct AttentionWeights {
    Var wq, wk, wv, wo;  // all [D x D]
};

struct EncoderLayerWeights {
    AttentionWeights attn;
    Var mlp_w1, mlp_w2;        // [D x ff], [ff x D]
    Var ln1_gain, ln1_bias;    // [D]
    Var ln2_gain, ln2_bias;    // [D]
};

// Scaled dot-product attention with per-head softmax; scale 1/sqrt(D/heads).
// q_in/k_in/v_in are token matrices [Tq x D] / [Tk x D] / [Tk x D].
Var multi_head_attention(Tape& tape, Var q_in, Var k_in, Var v_in,
                         const AttentionWeights& w, int n_heads, ForwardTrace* trace);

// Pre-projection encoder block shared by both attention stacks:
//   h = LayerNorm(tokens + Attention(qk_src, qk_src, tokens))
//   out = LayerNorm(h + MLP(h))
// Passing qk_src = tokens gives plain self-attention.
Var encoder_block(Tape& tape, Var tokens, Var qk_src, const EncoderLayerWeights& w,
                  int n_heads, ForwardTrace* trace);

// Attention-based token resampling: Q from the linear patch-axis map applied
// to the tokens, K and V from the tokens unchanged; no residual, no MLP.
Var resample_tokens(Tape& tape, Var tokens, Var patch_map, const AttentionWeights& w,
                    int n_heads, ForwardTrace* trace);

// Output head: flatten each channel's token matrix and apply the shared
// linear map, giving [C x O].
Var project_tokens(Tape& tape, const std::vector<Var>& channel_tokens, Var head_weight,
                   Var head_bias);

inline constexpr double kModelLayerNormEps = 1e-5;

// Full forward pass [C x I] -> [C x O].
Var model_forward(Tape& tape, const Tensor& series, const ModelConfig& config,
                  const BoundParams& bound, ForwardTrace* trace = nullptr);

// Convenience: builds a throwaway tape and returns the forecast values.
Tensor forward_values(const Tensor& series, const ModelConfig& config,
                      const ModelParams& params);

// -- checkpoint --------------------------------------------------------------
// Binary layout documented in docs/file_formats.md.

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const ModelParams& params);

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

Checkpoint load_checkpoint(const std::string& path);

std::string model_config_to_text(const ModelConfig& config);
ModelConfig model_config_from_text(const std::string& text);

}  // namespace timebridge
