#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "headliner/tokenize.hpp"

namespace headliner::pgn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class CellKind { Lstm, Gru };

struct PgnConfig {
    int vocab_size = 50;
    int embed_dim = 32;
    int hidden_dim = 32;   // per direction; attention dim equals hidden_dim
    int max_src_len = 64;
    int max_tgt_len = 16;
    double coverage_weight = 1.0;  // lambda
    CellKind cell = CellKind::Lstm;
    std::uint64_t seed = 7;
};

// All learnable tensors. Vectors are stored as n x 1 matrices so the
// visitor below can treat every parameter uniformly.
struct PgnParams {
    PgnConfig config;

    Mat embedding;             // vocab x E, shared by encoder and decoder
    Mat enc_fw_w, enc_fw_b;    // gates x (E+H), gates x 1
    Mat enc_bw_w, enc_bw_b;
    Mat dec_w, dec_b;
    Mat attn_wh;               // H x 2H
    Mat attn_ws;               // H x H
    Mat attn_wc;               // H x 1, coverage feature
    Mat attn_v;                // H x 1
    Mat attn_b;                // H x 1
    Mat out_v;                 // H x 3H, over [s_t; h*_t]
    Mat out_b;                 // H x 1
    Mat out_v2;                // vocab x H
    Mat out_b2;                // vocab x 1
    Mat ptr_wh;                // 2H x 1
    Mat ptr_ws;                // H x 1
    Mat ptr_wx;                // E x 1
    Mat ptr_b;                 // 1 x 1

    void for_each(const std::function<void(const std::string&, Mat&)>& fn);
    void for_each(const std::function<void(const std::string&, const Mat&)>& fn) const;

    // zero tensors with the shapes implied by cfg
    static PgnParams zeros_like(const PgnConfig& cfg);
};

// uniform(-0.1, 0.1) weights, zero biases, fixed seed
PgnParams init_params(const PgnConfig& cfg);

void save_checkpoint(const std::string& path, const PgnParams& params,
                     const tok::Vocab& vocab, tok::Scheme scheme);

struct Checkpoint {
    PgnParams params;
    tok::Vocab vocab;
    tok::Scheme scheme = tok::Scheme::Word;
};

Checkpoint load_checkpoint(const std::string& path);

// Per-example map of source out-of-vocabulary tokens to temporary ids
// >= vocab_size. Empty under a closed BPE vocabulary.
struct ExtendedVocabMap {
    std::unordered_map<std::string, int> id_of;
    std::vector<std::string> token_of;  // id = vocab_size + index

    int size() const { return static_cast<int>(token_of.size()); }
};

struct Example {
    std::vector<int> src_in;   // embedding ids (OOV -> UNK)
    std::vector<int> src_ext;  // extended ids used by the copy term
    std::vector<int> tgt_in;   // decoder inputs: BOS then target ids (OOV -> UNK)
    std::vector<int> tgt_ext;  // loss targets (extended), EOS appended
    ExtendedVocabMap oov;
};

// Truncates to the config limits, appends EOS, and builds the extended
// map (word mode only). Throws if a target token is outside
// vocab + extended ids.
Example make_example(const tok::Vocab& vocab, const PgnConfig& cfg,
                     const std::vector<std::string>& src_tokens,
                     const std::vector<std::string>& tgt_tokens,
                     bool extend_vocab);

struct AttnResult {
    Vec weights;  // on the simplex over source positions
    Vec context;  // convex combination of encoder states
};

// scores e_i = v . tanh(W_h h_i + W_s s + w_c c[i] + b); softmax with
// max subtraction
AttnResult attention(const Vec& decoder_state, const Mat& encoder_states,
                     const Vec& coverage, const PgnParams& params);

// P(w) = p_gen * vocab_dist(w) + (1 - p_gen) * sum of attention over
// source positions holding w; result lives on vocab_size + extended_size
Vec final_distribution(double p_gen, const Vec& vocab_dist, const Vec& attn_weights,
                       const std::vector<int>& src_ext_ids, int extended_size);

// returns (next coverage, step loss); loss = sum_i min(a[i], c[i])
std::pair<Vec, double> coverage_step(const Vec& coverage, const Vec& attn_weights);

struct StepDiagnostics {
    double p_gen = 0.0;
    Vec attn;
};

struct ForwardResult {
    double loss = 0.0;       // mean over steps of nll + lambda * covloss
    double nll = 0.0;        // mean negative log-likelihood
    double coverage_loss = 0.0;  // mean coverage penalty (unweighted)
    std::vector<StepDiagnostics> steps;
    // coverage-min branch per (step, position): true when a <= c; used
    // by grad_check to detect finite-difference kink crossings
    std::vector<std::vector<bool>> min_branches;
};

ForwardResult forward_loss(const PgnParams& params, const Example& ex, double lambda);

// accumulates into grads (shapes must match params)
ForwardResult forward_backward(const PgnParams& params, const Example& ex, double lambda,
                               PgnParams& grads);

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // finite difference straddled a coverage-min kink
};

// Central finite differences over every coordinate (or a seeded random
// subsample when max_coords > 0).
GradCheckResult grad_check(const PgnParams& params, const Example& ex, double lambda,
                           double eps = 1e-4, std::size_t max_coords = 0,
                           std::uint64_t subsample_seed = 1);

struct TrainOptions {
    int steps = 2000;
    int batch_size = 8;
    int grad_accum = 1;
    double lr = 2e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 2.0;   // global gradient norm; 0 disables
    int coverage_delay = 0;   // optimizer steps before the coverage loss kicks in
    int val_interval = 100;
};

struct CurvePoint {
    int step = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    PgnParams params;
    std::vector<CurvePoint> curve;
    bool diverged = false;
    int final_step = 0;
};

// Single-threaded and deterministic for a fixed config seed. On a
// non-finite loss the run aborts and returns the params saved at the
// last validation point.
TrainResult train(const PgnConfig& cfg, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainOptions& opts);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);

// fraction of teacher-forced steps whose argmax equals the target
double token_accuracy(const PgnParams& params, const std::vector<Example>& examples);

// Synthetic copy task: the headline is the first `copy_k` source
// tokens. Vocab has `vocab_size - 4` regular tokens after the reserved
// ones.
struct CopyTask {
    tok::Vocab vocab;
    std::vector<Example> train_set;
    std::vector<Example> val_set;
};

CopyTask make_copy_task(const PgnConfig& cfg, std::size_t n_train, std::size_t n_val,
                        int src_len = 8, int copy_k = 3, std::uint64_t seed = 99);

struct DecodeOptions {
    int beam = 4;
    int max_len = 0;  // 0 -> config max_tgt_len
    double alpha = 1.0;
};

// Beam-search decode of one source token sequence; extended ids resolve
// back to the copied source tokens.
std::vector<std::string> decode_headline(const PgnParams& params, const tok::Vocab& vocab,
                                         const std::vector<std::string>& src_tokens,
                                         bool extend_vocab, const DecodeOptions& opts = {});

}  // namespace headliner::pgn
