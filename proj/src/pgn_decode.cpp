#include <cmath>
#include <stdexcept>

#include "headliner/beam.hpp"
#include "headliner/pgn.hpp"

namespace headliner::pgn {

namespace {

Vec softmax(const Vec& v) {
    const double m = v.maxCoeff();
    Vec e = (v.array() - m).exp().matrix();
    return e / e.sum();
}

// Incremental decoder over a fixed encoded source.
class PgnStepScorer {
public:
    struct State {
        Vec s, cdec, cov;
    };

    PgnStepScorer(const PgnParams& params, const Example& ex)
        : params_(params), ex_(ex) {
        const PgnConfig& cfg = params.config;
        const int H = cfg.hidden_dim;
        const auto n = ex.src_in.size();
        if (n == 0) throw std::runtime_error("decode: empty source");

        enc_states_.resize(2 * H, static_cast<Eigen::Index>(n));
        Vec h = Vec::Zero(H), c = Vec::Zero(H);
        for (std::size_t i = 0; i < n; ++i) {
            step_cell(params.enc_fw_w, params.enc_fw_b, ex.src_in[i], h, c);
            enc_states_.col(static_cast<Eigen::Index>(i)).head(H) = h;
        }
        h.setZero();
        c.setZero();
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = n - 1 - k;
            step_cell(params.enc_bw_w, params.enc_bw_b, ex.src_in[i], h, c);
            enc_states_.col(static_cast<Eigen::Index>(i)).tail(H) = h;
        }
    }

    State initial() const {
        const int H = params_.config.hidden_dim;
        return {Vec::Zero(H), Vec::Zero(H), Vec::Zero(enc_states_.cols())};
    }

    int bos() const { return tok::Vocab::kBos; }
    int eos() const { return tok::Vocab::kEos; }

    std::pair<State, Vec> step(const State& state, int prev_token) const {
        const PgnConfig& cfg = params_.config;
        const int H = cfg.hidden_dim;
        const int V = cfg.vocab_size;
        const int in_id = prev_token < V ? prev_token : tok::Vocab::kUnk;

        State next = state;
        Vec x = params_.embedding.row(in_id).transpose();
        lstm_or_gru(params_.dec_w, params_.dec_b, x, next.s, next.cdec);

        AttnResult at = attention(next.s, enc_states_, next.cov, params_);
        const double pre_pg = params_.ptr_wh.col(0).dot(at.context) +
                              params_.ptr_ws.col(0).dot(next.s) +
                              params_.ptr_wx.col(0).dot(x) + params_.ptr_b(0, 0);
        const double pg = 1.0 / (1.0 + std::exp(-pre_pg));

        Vec feat(3 * H);
        feat << next.s, at.context;
        Vec pv = softmax(params_.out_v2 * (params_.out_v * feat + params_.out_b.col(0)) +
                         params_.out_b2.col(0));
        Vec p = final_distribution(pg, pv, at.weights, ex_.src_ext, ex_.oov.size());
        next.cov += at.weights;

        Vec logp = p.array().log().matrix();  // zero mass -> -inf, never selected
        return {std::move(next), std::move(logp)};
    }

private:
    void step_cell(const Mat& W, const Mat& b, int token, Vec& h, Vec& c) const {
        Vec x = params_.embedding.row(token).transpose();
        lstm_or_gru(W, b, x, h, c);
    }

    void lstm_or_gru(const Mat& W, const Mat& b, const Vec& x, Vec& h, Vec& c) const {
        const int H = params_.config.hidden_dim;
        Vec xh(x.size() + H);
        xh << x, h;
        if (params_.config.cell == CellKind::Lstm) {
            Vec z = W * xh + b.col(0);
            auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
            Vec gi = z.segment(0, H).unaryExpr(sig);
            Vec gf = z.segment(H, H).unaryExpr(sig);
            Vec gg = z.segment(2 * H, H).array().tanh().matrix();
            Vec go = z.segment(3 * H, H).unaryExpr(sig);
            c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
            h = go.cwiseProduct(c.array().tanh().matrix());
        } else {
            auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
            Vec zr = W.topRows(2 * H) * xh + b.col(0).segment(0, 2 * H);
            Vec gz = zr.segment(0, H).unaryExpr(sig);
            Vec gr = zr.segment(H, H).unaryExpr(sig);
            Vec xrh(x.size() + H);
            xrh << x, gr.cwiseProduct(h);
            Vec gn =
                (W.bottomRows(H) * xrh + b.col(0).segment(2 * H, H)).array().tanh().matrix();
            h = (Vec::Ones(H) - gz).cwiseProduct(gn) + gz.cwiseProduct(h);
        }
    }

    const PgnParams& params_;
    const Example& ex_;
    Mat enc_states_;
};

}  // namespace

std::vector<std::string> decode_headline(const PgnParams& params, const tok::Vocab& vocab,
                                         const std::vector<std::string>& src_tokens,
                                         bool extend_vocab, const DecodeOptions& opts) {
    Example ex = make_example(vocab, params.config, src_tokens, {}, extend_vocab);
    PgnStepScorer scorer(params, ex);
    const int max_len = opts.max_len > 0 ? opts.max_len : params.config.max_tgt_len;
    BeamResult best = beam_search(scorer, opts.beam, max_len, opts.alpha);

    std::vector<std::string> out;
    out.reserve(best.tokens.size());
    for (int id : best.tokens) {
        if (id < params.config.vocab_size) {
            out.push_back(vocab.token_of[static_cast<std::size_t>(id)]);
        } else {
            out.push_back(ex.oov.token_of[static_cast<std::size_t>(id - params.config.vocab_size)]);
        }
    }
    return out;
}

}  // namespace headliner::pgn
