#include "headliner/pgn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "headliner/io.hpp"

namespace headliner::pgn {

namespace {

int gate_rows(const PgnConfig& cfg) {
    return (cfg.cell == CellKind::Lstm ? 4 : 3) * cfg.hidden_dim;
}

void check_config(const PgnConfig& cfg) {
    if (cfg.vocab_size < 5 || cfg.embed_dim < 1 || cfg.hidden_dim < 1 ||
        cfg.max_src_len < 1 || cfg.max_tgt_len < 1 || cfg.coverage_weight < 0.0) {
        throw std::runtime_error("pgn: invalid config");
    }
}

}  // namespace

void PgnParams::for_each(const std::function<void(const std::string&, Mat&)>& fn) {
    fn("embedding", embedding);
    fn("enc_fw_w", enc_fw_w);
    fn("enc_fw_b", enc_fw_b);
    fn("enc_bw_w", enc_bw_w);
    fn("enc_bw_b", enc_bw_b);
    fn("dec_w", dec_w);
    fn("dec_b", dec_b);
    fn("attn_wh", attn_wh);
    fn("attn_ws", attn_ws);
    fn("attn_wc", attn_wc);
    fn("attn_v", attn_v);
    fn("attn_b", attn_b);
    fn("out_v", out_v);
    fn("out_b", out_b);
    fn("out_v2", out_v2);
    fn("out_b2", out_b2);
    fn("ptr_wh", ptr_wh);
    fn("ptr_ws", ptr_ws);
    fn("ptr_wx", ptr_wx);
    fn("ptr_b", ptr_b);
}

void PgnParams::for_each(const std::function<void(const std::string&, const Mat&)>& fn) const {
    const_cast<PgnParams*>(this)->for_each(
        [&](const std::string& name, Mat& m) { fn(name, m); });
}

PgnParams PgnParams::zeros_like(const PgnConfig& cfg) {
    check_config(cfg);
    const int V = cfg.vocab_size;
    const int E = cfg.embed_dim;
    const int H = cfg.hidden_dim;
    const int G = gate_rows(cfg);

    PgnParams p;
    p.config = cfg;
    p.embedding = Mat::Zero(V, E);
    p.enc_fw_w = Mat::Zero(G, E + H);
    p.enc_fw_b = Mat::Zero(G, 1);
    p.enc_bw_w = Mat::Zero(G, E + H);
    p.enc_bw_b = Mat::Zero(G, 1);
    p.dec_w = Mat::Zero(G, E + H);
    p.dec_b = Mat::Zero(G, 1);
    p.attn_wh = Mat::Zero(H, 2 * H);
    p.attn_ws = Mat::Zero(H, H);
    p.attn_wc = Mat::Zero(H, 1);
    p.attn_v = Mat::Zero(H, 1);
    p.attn_b = Mat::Zero(H, 1);
    p.out_v = Mat::Zero(H, 3 * H);
    p.out_b = Mat::Zero(H, 1);
    p.out_v2 = Mat::Zero(V, H);
    p.out_b2 = Mat::Zero(V, 1);
    p.ptr_wh = Mat::Zero(2 * H, 1);
    p.ptr_ws = Mat::Zero(H, 1);
    p.ptr_wx = Mat::Zero(E, 1);
    p.ptr_b = Mat::Zero(1, 1);
    return p;
}

PgnParams init_params(const PgnConfig& cfg) {
    PgnParams p = PgnParams::zeros_like(cfg);
    std::mt19937_64 gen(cfg.seed);
    const auto uniform = [&]() {
        // 53-bit mantissa draw in [0,1), shifted to (-0.1, 0.1)
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        return 0.2 * u - 0.1;
    };
    p.for_each([&](const std::string& name, Mat& m) {
        const bool is_bias = name.ends_with("_b") || name.ends_with("_b2");
        if (is_bias) return;  // biases stay zero
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform();
        }
    });
    return p;
}

// ---------------------------------------------------------------------------
// scalar-generic forward machinery; double drives training, long double
// backs the finite-difference oracle

namespace {

template <typename S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct ParamsT {
    MatT<S> embedding, enc_fw_w, enc_fw_b, enc_bw_w, enc_bw_b, dec_w, dec_b;
    MatT<S> attn_wh, attn_ws, attn_wc, attn_v, attn_b;
    MatT<S> out_v, out_b, out_v2, out_b2, ptr_wh, ptr_ws, ptr_wx, ptr_b;

    explicit ParamsT(const PgnParams& p)
        : embedding(p.embedding.cast<S>()),
          enc_fw_w(p.enc_fw_w.cast<S>()),
          enc_fw_b(p.enc_fw_b.cast<S>()),
          enc_bw_w(p.enc_bw_w.cast<S>()),
          enc_bw_b(p.enc_bw_b.cast<S>()),
          dec_w(p.dec_w.cast<S>()),
          dec_b(p.dec_b.cast<S>()),
          attn_wh(p.attn_wh.cast<S>()),
          attn_ws(p.attn_ws.cast<S>()),
          attn_wc(p.attn_wc.cast<S>()),
          attn_v(p.attn_v.cast<S>()),
          attn_b(p.attn_b.cast<S>()),
          out_v(p.out_v.cast<S>()),
          out_b(p.out_b.cast<S>()),
          out_v2(p.out_v2.cast<S>()),
          out_b2(p.out_b2.cast<S>()),
          ptr_wh(p.ptr_wh.cast<S>()),
          ptr_ws(p.ptr_ws.cast<S>()),
          ptr_wx(p.ptr_wx.cast<S>()),
          ptr_b(p.ptr_b.cast<S>()) {}
};

template <typename S>
VecT<S> sigmoid(const VecT<S>& v) {
    return (S(1) + (-v.array()).exp()).inverse().matrix();
}

template <typename S>
VecT<S> softmax_t(const VecT<S>& v) {
    const S m = v.maxCoeff();
    VecT<S> e = (v.array() - m).exp().matrix();
    return e / e.sum();
}

template <typename S>
struct CellCacheT {
    VecT<S> x, h_prev, c_prev;
    VecT<S> gi, gf, gg, go;  // LSTM
    VecT<S> gz, gr, gn, rh;  // GRU
    VecT<S> c_new, tanh_c;
    VecT<S> h_new;
};

template <typename S>
void cell_forward(const MatT<S>& W, const MatT<S>& b, CellKind kind, CellCacheT<S>& cc) {
    const auto H = cc.h_prev.size();
    VecT<S> xh(cc.x.size() + H);
    xh << cc.x, cc.h_prev;
    if (kind == CellKind::Lstm) {
        VecT<S> z = W * xh + b.col(0);
        cc.gi = sigmoid<S>(z.segment(0, H));
        cc.gf = sigmoid<S>(z.segment(H, H));
        cc.gg = z.segment(2 * H, H).array().tanh().matrix();
        cc.go = sigmoid<S>(z.segment(3 * H, H));
        cc.c_new = cc.gf.cwiseProduct(cc.c_prev) + cc.gi.cwiseProduct(cc.gg);
        cc.tanh_c = cc.c_new.array().tanh().matrix();
        cc.h_new = cc.go.cwiseProduct(cc.tanh_c);
    } else {
        // z and r from [x; h]; candidate from [x; r .* h]
        VecT<S> zr = W.topRows(2 * H) * xh + b.col(0).segment(0, 2 * H);
        cc.gz = sigmoid<S>(zr.segment(0, H));
        cc.gr = sigmoid<S>(zr.segment(H, H));
        cc.rh = cc.gr.cwiseProduct(cc.h_prev);
        VecT<S> xrh(cc.x.size() + H);
        xrh << cc.x, cc.rh;
        cc.gn = (W.bottomRows(H) * xrh + b.col(0).segment(2 * H, H)).array().tanh().matrix();
        cc.h_new =
            (VecT<S>::Ones(H) - cc.gz).cwiseProduct(cc.gn) + cc.gz.cwiseProduct(cc.h_prev);
        cc.c_new = VecT<S>::Zero(H);
        cc.tanh_c = VecT<S>::Zero(H);
    }
}

template <typename S>
struct DecStepTraceT {
    CellCacheT<S> cell;
    VecT<S> cov;    // coverage before this step's update
    MatT<S> u;      // H x n tanh activations
    VecT<S> a;      // attention weights
    VecT<S> hstar;  // context
    VecT<S> o1;     // first output layer activation
    VecT<S> pv;     // vocab distribution
    VecT<S> p;      // final distribution over vocab + extended
    S pg = S(0);
    S py = S(0);
    S covloss = S(0);
    int inp = 0;
    int y = 0;
    std::vector<bool> branch;  // a[i] <= cov[i]
};

template <typename S>
struct FwdTraceT {
    std::vector<CellCacheT<S>> enc_fw, enc_bw;
    MatT<S> enc_states;  // 2H x n
    std::vector<DecStepTraceT<S>> dec;
    S nll_sum = S(0);
    S cov_sum = S(0);
    S loss = S(0);
};

template <typename S>
FwdTraceT<S> run_forward(const PgnParams& dparams, const Example& ex, double lambda) {
    const PgnConfig& cfg = dparams.config;
    const ParamsT<S> params(dparams);
    const int H = cfg.hidden_dim;
    const int V = cfg.vocab_size;
    const auto n = ex.src_in.size();
    const auto T = ex.tgt_ext.size();
    if (n == 0 || T == 0) throw std::runtime_error("pgn: empty source or target");
    if (ex.tgt_in.size() != T) throw std::runtime_error("pgn: malformed example");
    const int ext = ex.oov.size();
    for (int id : ex.src_in) {
        if (id < 0 || id >= V) throw std::runtime_error("pgn: source id outside vocab");
    }
    for (int y : ex.tgt_ext) {
        if (y < 0 || y >= V + ext) {
            throw std::runtime_error("pgn: target id outside vocab and extended ids: " +
                                     std::to_string(y));
        }
    }

    FwdTraceT<S> tr;
    tr.enc_fw.resize(n);
    tr.enc_bw.resize(n);
    tr.enc_states.resize(2 * H, static_cast<Eigen::Index>(n));

    VecT<S> h = VecT<S>::Zero(H), c = VecT<S>::Zero(H);
    for (std::size_t i = 0; i < n; ++i) {
        CellCacheT<S>& cc = tr.enc_fw[i];
        cc.x = params.embedding.row(ex.src_in[i]).transpose();
        cc.h_prev = h;
        cc.c_prev = c;
        cell_forward<S>(params.enc_fw_w, params.enc_fw_b, cfg.cell, cc);
        h = cc.h_new;
        c = cc.c_new;
        tr.enc_states.col(static_cast<Eigen::Index>(i)).head(H) = h;
    }
    h.setZero();
    c.setZero();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = n - 1 - k;
        CellCacheT<S>& cc = tr.enc_bw[i];
        cc.x = params.embedding.row(ex.src_in[i]).transpose();
        cc.h_prev = h;
        cc.c_prev = c;
        cell_forward<S>(params.enc_bw_w, params.enc_bw_b, cfg.cell, cc);
        h = cc.h_new;
        c = cc.c_new;
        tr.enc_states.col(static_cast<Eigen::Index>(i)).tail(H) = h;
    }

    const MatT<S> q = (params.attn_wh * tr.enc_states).colwise() + params.attn_b.col(0);

    VecT<S> s = VecT<S>::Zero(H), cdec = VecT<S>::Zero(H);
    VecT<S> cov = VecT<S>::Zero(static_cast<Eigen::Index>(n));
    tr.dec.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        DecStepTraceT<S>& st = tr.dec[t];
        st.inp = ex.tgt_in[t];
        st.y = ex.tgt_ext[t];
        st.cov = cov;

        st.cell.x = params.embedding.row(st.inp).transpose();
        st.cell.h_prev = s;
        st.cell.c_prev = cdec;
        cell_forward<S>(params.dec_w, params.dec_b, cfg.cell, st.cell);
        s = st.cell.h_new;
        cdec = st.cell.c_new;

        MatT<S> pre = q;
        pre.colwise() += VecT<S>(params.attn_ws * s);
        pre.noalias() += params.attn_wc.col(0) * cov.transpose();
        st.u = pre.array().tanh().matrix();
        VecT<S> e = st.u.transpose() * params.attn_v.col(0);
        st.a = softmax_t<S>(e);
        st.hstar = tr.enc_states * st.a;

        st.covloss = S(0);
        st.branch.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            st.branch[i] = st.a[ii] <= cov[ii];
            st.covloss += st.branch[i] ? st.a[ii] : cov[ii];
        }

        VecT<S> feat(3 * H);
        feat << s, st.hstar;
        st.o1 = params.out_v * feat + params.out_b.col(0);
        st.pv = softmax_t<S>(params.out_v2 * st.o1 + params.out_b2.col(0));
        const S pre_pg = params.ptr_wh.col(0).dot(st.hstar) + params.ptr_ws.col(0).dot(s) +
                         params.ptr_wx.col(0).dot(st.cell.x) + params.ptr_b(0, 0);
        st.pg = S(1) / (S(1) + std::exp(-pre_pg));

        st.p = VecT<S>::Zero(V + ext);
        st.p.head(V) = st.pg * st.pv;
        const S copy_w = S(1) - st.pg;
        for (std::size_t i = 0; i < n; ++i) {
            st.p[ex.src_ext[i]] += copy_w * st.a[static_cast<Eigen::Index>(i)];
        }
        st.py = std::max(st.p[st.y], S(1e-300));
        tr.nll_sum += -std::log(st.py);
        tr.cov_sum += st.covloss;

        cov += st.a;
    }
    const S dT = static_cast<S>(T);
    tr.loss = (tr.nll_sum + S(lambda) * tr.cov_sum) / dT;
    return tr;
}

// Accumulates parameter gradients and adds the input gradient into dx.
void cell_backward(const Mat& W, CellKind kind, const CellCacheT<double>& cc, const Vec& dh,
                   const Vec& dc_in, Mat& dW, Mat& db, Vec& dx, Vec& dh_prev, Vec& dc_prev) {
    const auto H = cc.h_prev.size();
    const auto E = cc.x.size();
    if (kind == CellKind::Lstm) {
        Vec do_ = dh.cwiseProduct(cc.tanh_c);
        Vec dc = dc_in + dh.cwiseProduct(cc.go).cwiseProduct(
                             (1.0 - cc.tanh_c.array().square()).matrix());
        Vec di = dc.cwiseProduct(cc.gg);
        Vec dg = dc.cwiseProduct(cc.gi);
        Vec df = dc.cwiseProduct(cc.c_prev);
        dc_prev = dc.cwiseProduct(cc.gf);

        Vec dz(4 * H);
        dz.segment(0, H) = di.cwiseProduct(cc.gi).cwiseProduct((1.0 - cc.gi.array()).matrix());
        dz.segment(H, H) = df.cwiseProduct(cc.gf).cwiseProduct((1.0 - cc.gf.array()).matrix());
        dz.segment(2 * H, H) = dg.cwiseProduct((1.0 - cc.gg.array().square()).matrix());
        dz.segment(3 * H, H) =
            do_.cwiseProduct(cc.go).cwiseProduct((1.0 - cc.go.array()).matrix());

        Vec xh(E + H);
        xh << cc.x, cc.h_prev;
        dW.noalias() += dz * xh.transpose();
        db.col(0) += dz;
        Vec dxh = W.transpose() * dz;
        dx += dxh.segment(0, E);
        dh_prev = dxh.segment(E, H);
    } else {
        Vec dz_gate = dh.cwiseProduct(cc.h_prev - cc.gn);
        Vec dn = dh.cwiseProduct((1.0 - cc.gz.array()).matrix());
        dh_prev = dh.cwiseProduct(cc.gz);

        Vec dan = dn.cwiseProduct((1.0 - cc.gn.array().square()).matrix());
        Vec xrh(E + H);
        xrh << cc.x, cc.rh;
        dW.bottomRows(H).noalias() += dan * xrh.transpose();
        db.col(0).segment(2 * H, H) += dan;
        Vec dxrh = W.bottomRows(H).transpose() * dan;
        dx += dxrh.segment(0, E);
        Vec drh = dxrh.segment(E, H);
        Vec dr = drh.cwiseProduct(cc.h_prev);
        dh_prev += drh.cwiseProduct(cc.gr);

        Vec dzr(2 * H);
        dzr.segment(0, H) =
            dz_gate.cwiseProduct(cc.gz).cwiseProduct((1.0 - cc.gz.array()).matrix());
        dzr.segment(H, H) =
            dr.cwiseProduct(cc.gr).cwiseProduct((1.0 - cc.gr.array()).matrix());
        Vec xh(E + H);
        xh << cc.x, cc.h_prev;
        dW.topRows(2 * H).noalias() += dzr * xh.transpose();
        db.col(0).segment(0, 2 * H) += dzr;
        Vec dxh = W.topRows(2 * H).transpose() * dzr;
        dx += dxh.segment(0, E);
        dh_prev += dxh.segment(E, H);
        dc_prev = Vec::Zero(H);
    }
}

Vec softmax(const Vec& v) { return softmax_t<double>(v); }

ForwardResult trace_to_result(const FwdTraceT<double>& tr) {
    ForwardResult res;
    const double dT = static_cast<double>(tr.dec.size());
    res.loss = tr.loss;
    res.nll = tr.nll_sum / dT;
    res.coverage_loss = tr.cov_sum / dT;
    res.steps.reserve(tr.dec.size());
    res.min_branches.reserve(tr.dec.size());
    for (const auto& st : tr.dec) {
        res.steps.push_back({st.pg, st.a});
        res.min_branches.push_back(st.branch);
    }
    return res;
}

}  // namespace

// ---------------------------------------------------------------------------
// spec-level operations

AttnResult attention(const Vec& decoder_state, const Mat& encoder_states,
                     const Vec& coverage, const PgnParams& params) {
    const auto n = encoder_states.cols();
    if (n < 1) throw std::runtime_error("attention: no encoder states");
    Mat pre = params.attn_wh * encoder_states;  // H x n
    pre.colwise() += Vec(params.attn_ws * decoder_state + params.attn_b.col(0));
    pre.noalias() += params.attn_wc.col(0) * coverage.transpose();
    Mat u = pre.array().tanh().matrix();
    Vec e = u.transpose() * params.attn_v.col(0);
    AttnResult res;
    res.weights = softmax(e);
    res.context = encoder_states * res.weights;
    return res;
}

Vec final_distribution(double p_gen, const Vec& vocab_dist, const Vec& attn_weights,
                       const std::vector<int>& src_ext_ids, int extended_size) {
    if (static_cast<std::size_t>(attn_weights.size()) != src_ext_ids.size()) {
        throw std::runtime_error("final_distribution: attention/source length mismatch");
    }
    const auto V = vocab_dist.size();
    Vec out = Vec::Zero(V + extended_size);
    out.head(V) = p_gen * vocab_dist;
    const double copy_w = 1.0 - p_gen;
    for (std::size_t i = 0; i < src_ext_ids.size(); ++i) {
        const int id = src_ext_ids[i];
        if (id < 0 || id >= V + extended_size) {
            throw std::runtime_error("final_distribution: source id out of range");
        }
        out[id] += copy_w * attn_weights[static_cast<Eigen::Index>(i)];
    }
    return out;
}

std::pair<Vec, double> coverage_step(const Vec& coverage, const Vec& attn_weights) {
    if (coverage.size() != attn_weights.size()) {
        throw std::runtime_error("coverage_step: shape mismatch");
    }
    const double loss = coverage.cwiseMin(attn_weights).sum();
    return {coverage + attn_weights, loss};
}

ForwardResult forward_loss(const PgnParams& params, const Example& ex, double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw std::runtime_error("forward_loss: lambda must be finite and >= 0");
    }
    return trace_to_result(run_forward<double>(params, ex, lambda));
}

ForwardResult forward_backward(const PgnParams& params, const Example& ex, double lambda,
                               PgnParams& grads) {
    const PgnConfig& cfg = params.config;
    const int H = cfg.hidden_dim;
    const int V = cfg.vocab_size;
    FwdTraceT<double> tr = run_forward<double>(params, ex, lambda);
    const auto n = ex.src_in.size();
    const auto T = tr.dec.size();
    const double g = 1.0 / static_cast<double>(T);
    const double gl = g * lambda;

    Mat d_enc = Mat::Zero(2 * H, static_cast<Eigen::Index>(n));
    Vec ds_next = Vec::Zero(H);
    Vec dc_next = Vec::Zero(H);
    Vec dcov_next = Vec::Zero(static_cast<Eigen::Index>(n));

    for (std::size_t tt = 0; tt < T; ++tt) {
        const std::size_t t = T - 1 - tt;
        const DecStepTraceT<double>& st = tr.dec[t];
        const Vec& s = st.cell.h_new;

        // final distribution and NLL
        const double dpy = -g / st.py;
        const double pvy = st.y < V ? st.pv[st.y] : 0.0;
        double copy_y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (ex.src_ext[i] == st.y) copy_y += st.a[static_cast<Eigen::Index>(i)];
        }
        const double dpg_dist = dpy * (pvy - copy_y);
        double dpg = dpg_dist;
        Vec da = Vec::Zero(static_cast<Eigen::Index>(n));
        const double copy_w = 1.0 - st.pg;
        for (std::size_t i = 0; i < n; ++i) {
            if (ex.src_ext[i] == st.y) da[static_cast<Eigen::Index>(i)] += dpy * copy_w;
        }
        const double dpv_y = st.y < V ? dpy * st.pg : 0.0;

        // coverage penalty: subgradient follows the recorded branch
        Vec dcov = dcov_next;
        if (lambda > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                if (st.branch[i]) da[ii] += gl;
                else dcov[ii] += gl;
            }
        }
        da += dcov_next;  // c_{t+1} = c_t + a_t

        // vocab softmax
        Vec dlogits = Vec::Zero(V);
        if (dpv_y != 0.0) {
            const double sdot = st.pv[st.y] * dpv_y;
            dlogits = -sdot * st.pv;
            dlogits[st.y] += st.pv[st.y] * dpv_y;
        }
        grads.out_v2.noalias() += dlogits * st.o1.transpose();
        grads.out_b2.col(0) += dlogits;
        Vec do1 = params.out_v2.transpose() * dlogits;

        Vec feat(3 * H);
        feat << s, st.hstar;
        grads.out_v.noalias() += do1 * feat.transpose();
        grads.out_b.col(0) += do1;
        Vec dfeat = params.out_v.transpose() * do1;
        Vec ds = dfeat.head(H) + ds_next;
        Vec dhstar = dfeat.tail(2 * H);

        // pointer gate
        const double dpre_pg = dpg * st.pg * (1.0 - st.pg);
        grads.ptr_wh.col(0) += dpre_pg * st.hstar;
        dhstar += dpre_pg * params.ptr_wh.col(0);
        grads.ptr_ws.col(0) += dpre_pg * s;
        ds += dpre_pg * params.ptr_ws.col(0);
        grads.ptr_wx.col(0) += dpre_pg * st.cell.x;
        Vec dx = dpre_pg * params.ptr_wx.col(0);
        grads.ptr_b(0, 0) += dpre_pg;

        // context
        da += tr.enc_states.transpose() * dhstar;
        d_enc.noalias() += dhstar * st.a.transpose();

        // attention softmax
        const double adot = st.a.dot(da);
        Vec de = st.a.cwiseProduct((da.array() - adot).matrix());

        // e_i = v . u_i
        grads.attn_v.col(0) += st.u * de;
        Mat dpre = params.attn_v.col(0) * de.transpose();  // H x n
        dpre = dpre.cwiseProduct((1.0 - st.u.array().square()).matrix());

        grads.attn_wh.noalias() += dpre * tr.enc_states.transpose();
        grads.attn_b.col(0) += dpre.rowwise().sum();
        d_enc.noalias() += params.attn_wh.transpose() * dpre;
        Vec dsum = dpre.rowwise().sum();
        grads.attn_ws.noalias() += dsum * s.transpose();
        ds += params.attn_ws.transpose() * dsum;
        grads.attn_wc.col(0) += dpre * st.cov;
        dcov += dpre.transpose() * params.attn_wc.col(0);

        // decoder cell
        Vec ds_prev = Vec::Zero(H), dc_prev = Vec::Zero(H);
        cell_backward(params.dec_w, cfg.cell, st.cell, ds, dc_next, grads.dec_w, grads.dec_b,
                      dx, ds_prev, dc_prev);
        ds_next = ds_prev;
        dc_next = dc_prev;
        grads.embedding.row(st.inp) += dx.transpose();
        dcov_next = dcov;
    }

    // encoder, forward direction
    Vec dh_carry = Vec::Zero(H), dc_carry = Vec::Zero(H);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = n - 1 - k;
        Vec dh = d_enc.col(static_cast<Eigen::Index>(i)).head(H) + dh_carry;
        Vec dx = Vec::Zero(cfg.embed_dim);
        Vec dh_prev = Vec::Zero(H), dc_prev = Vec::Zero(H);
        cell_backward(params.enc_fw_w, cfg.cell, tr.enc_fw[i], dh, dc_carry, grads.enc_fw_w,
                      grads.enc_fw_b, dx, dh_prev, dc_prev);
        grads.embedding.row(ex.src_in[i]) += dx.transpose();
        dh_carry = dh_prev;
        dc_carry = dc_prev;
    }
    // encoder, backward direction (time runs right to left)
    dh_carry.setZero();
    dc_carry.setZero();
    for (std::size_t i = 0; i < n; ++i) {
        Vec dh = d_enc.col(static_cast<Eigen::Index>(i)).tail(H) + dh_carry;
        Vec dx = Vec::Zero(cfg.embed_dim);
        Vec dh_prev = Vec::Zero(H), dc_prev = Vec::Zero(H);
        cell_backward(params.enc_bw_w, cfg.cell, tr.enc_bw[i], dh, dc_carry, grads.enc_bw_w,
                      grads.enc_bw_b, dx, dh_prev, dc_prev);
        grads.embedding.row(ex.src_in[i]) += dx.transpose();
        dh_carry = dh_prev;
        dc_carry = dc_prev;
    }

    return trace_to_result(tr);
}

// ---------------------------------------------------------------------------
// gradient checking

GradCheckResult grad_check(const PgnParams& params, const Example& ex, double lambda,
                           double eps, std::size_t max_coords, std::uint64_t subsample_seed) {
    PgnParams grads = PgnParams::zeros_like(params.config);
    forward_backward(params, ex, lambda, grads);

    struct Coord {
        std::string name;
        Eigen::Index r, c;
    };
    std::vector<Coord> coords;
    grads.for_each([&](const std::string& name, Mat& m) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) coords.push_back({name, r, c});
        }
    });
    if (max_coords > 0 && coords.size() > max_coords) {
        std::mt19937_64 gen(subsample_seed);
        for (std::size_t i = coords.size() - 1; i > 0; --i) {
            std::swap(coords[i], coords[gen() % (i + 1)]);
        }
        coords.resize(max_coords);
    }

    PgnParams work = params;
    GradCheckResult res;
    for (const auto& co : coords) {
        Mat* wm = nullptr;
        const Mat* gm = nullptr;
        work.for_each([&](const std::string& name, Mat& m) {
            if (name == co.name) wm = &m;
        });
        grads.for_each([&](const std::string& name, Mat& m) {
            if (name == co.name) gm = &m;
        });
        const double orig = (*wm)(co.r, co.c);

        // The oracle runs the scalar-generic forward in extended
        // precision: the analytic gradient under test stays double, but
        // the difference quotient itself must resolve absolute steps of
        // ~1e-12 that double evaluation noise would swamp.
        (*wm)(co.r, co.c) = orig + eps;
        FwdTraceT<long double> plus = run_forward<long double>(work, ex, lambda);
        (*wm)(co.r, co.c) = orig - eps;
        FwdTraceT<long double> minus = run_forward<long double>(work, ex, lambda);
        (*wm)(co.r, co.c) = orig;

        // a coordinate whose perturbation flips a coverage-min branch
        // straddles the kink; finite differences are meaningless there
        if (lambda > 0.0) {
            bool flipped = false;
            for (std::size_t t = 0; t < plus.dec.size() && !flipped; ++t) {
                flipped = plus.dec[t].branch != minus.dec[t].branch;
            }
            if (flipped) {
                ++res.skipped;
                continue;
            }
        }

        const double fd =
            static_cast<double>((plus.loss - minus.loss) / (2.0L * static_cast<long double>(eps)));
        const double an = (*gm)(co.r, co.c);
        if (!std::isfinite(an) || !std::isfinite(fd)) {
            throw std::runtime_error("grad_check: non-finite gradient at " + co.name);
        }
        const double rel = std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_param = co.name;
        }
        ++res.checked;
    }
    return res;
}

// ---------------------------------------------------------------------------
// examples

Example make_example(const tok::Vocab& vocab, const PgnConfig& cfg,
                     const std::vector<std::string>& src_tokens,
                     const std::vector<std::string>& tgt_tokens,
                     bool extend_vocab) {
    if (vocab.size() != cfg.vocab_size) {
        throw std::runtime_error("make_example: vocab size does not match config");
    }
    Example ex;
    const std::size_t src_n =
        std::min(src_tokens.size(), static_cast<std::size_t>(cfg.max_src_len));
    const std::size_t tgt_n =
        std::min(tgt_tokens.size(), static_cast<std::size_t>(cfg.max_tgt_len - 1));

    for (std::size_t i = 0; i < src_n; ++i) {
        const std::string& w = src_tokens[i];
        const int in_id = vocab.id(w);
        ex.src_in.push_back(in_id);
        if (in_id != tok::Vocab::kUnk || !extend_vocab) {
            ex.src_ext.push_back(in_id);
        } else {
            auto it = ex.oov.id_of.find(w);
            int ext_id;
            if (it == ex.oov.id_of.end()) {
                ext_id = cfg.vocab_size + ex.oov.size();
                ex.oov.id_of.emplace(w, ext_id);
                ex.oov.token_of.push_back(w);
            } else {
                ext_id = it->second;
            }
            ex.src_ext.push_back(ext_id);
        }
    }

    ex.tgt_in.push_back(tok::Vocab::kBos);
    for (std::size_t i = 0; i < tgt_n; ++i) {
        const std::string& w = tgt_tokens[i];
        const int in_id = vocab.id(w);
        int ext_id = in_id;
        if (in_id == tok::Vocab::kUnk && extend_vocab) {
            // an OOV target is reachable only by copying it from the source
            auto it = ex.oov.id_of.find(w);
            if (it != ex.oov.id_of.end()) ext_id = it->second;
        }
        ex.tgt_ext.push_back(ext_id);
        ex.tgt_in.push_back(in_id);
    }
    // inputs [BOS, y_1..y_k] line up with targets [y_1..y_k, EOS]
    ex.tgt_ext.push_back(tok::Vocab::kEos);
    return ex;
}

// ---------------------------------------------------------------------------
// training

namespace {

class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : gen_(seed) {}
    std::uint64_t bounded(std::uint64_t m) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % m;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % m;
    }

private:
    std::mt19937_64 gen_;
};

struct Adam {
    PgnParams m, v;
    double beta1, beta2, eps, lr;
    long long t = 0;

    Adam(const PgnConfig& cfg, const TrainOptions& opts)
        : m(PgnParams::zeros_like(cfg)),
          v(PgnParams::zeros_like(cfg)),
          beta1(opts.adam_beta1),
          beta2(opts.adam_beta2),
          eps(opts.adam_eps),
          lr(opts.lr) {}

    void step(PgnParams& params, PgnParams& grads) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        std::vector<Mat*> ps, gs, ms, vs;
        params.for_each([&](const std::string&, Mat& x) { ps.push_back(&x); });
        grads.for_each([&](const std::string&, Mat& x) { gs.push_back(&x); });
        m.for_each([&](const std::string&, Mat& x) { ms.push_back(&x); });
        v.for_each([&](const std::string&, Mat& x) { vs.push_back(&x); });
        for (std::size_t k = 0; k < ps.size(); ++k) {
            Mat& g = *gs[k];
            Mat& mm = *ms[k];
            Mat& vv = *vs[k];
            mm = beta1 * mm + (1.0 - beta1) * g;
            vv = beta2 * vv + (1.0 - beta2) * g.cwiseProduct(g);
            ps[k]->array() -= lr * (mm.array() / bc1) / ((vv.array() / bc2).sqrt() + eps);
        }
    }
};

void zero_params(PgnParams& p) {
    p.for_each([](const std::string&, Mat& m) { m.setZero(); });
}

double validation_loss(const PgnParams& params, const std::vector<Example>& val_set,
                       double lambda) {
    if (val_set.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& ex : val_set) sum += forward_loss(params, ex, lambda).loss;
    return sum / static_cast<double>(val_set.size());
}

}  // namespace

TrainResult train(const PgnConfig& cfg, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainOptions& opts) {
    if (train_set.empty()) throw std::runtime_error("train: empty training set");
    if (opts.batch_size < 1 || opts.grad_accum < 1) {
        throw std::runtime_error("train: batch_size and grad_accum must be >= 1");
    }
    TrainResult res;
    res.params = init_params(cfg);
    if (opts.steps <= 0) return res;

    const double lambda = cfg.coverage_weight;
    Adam adam(cfg, opts);
    DetRng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    PgnParams grads = PgnParams::zeros_like(cfg);
    PgnParams last_good = res.params;

    double loss_acc = 0.0;
    int loss_n = 0;
    const auto micro = static_cast<double>(opts.batch_size) * opts.grad_accum;

    for (int step = 1; step <= opts.steps; ++step) {
        const double step_lambda = step > opts.coverage_delay ? lambda : 0.0;
        zero_params(grads);
        double batch_loss = 0.0;
        for (int acc = 0; acc < opts.grad_accum; ++acc) {
            for (int b = 0; b < opts.batch_size; ++b) {
                const auto i = static_cast<std::size_t>(rng.bounded(train_set.size()));
                batch_loss +=
                    forward_backward(res.params, train_set[i], step_lambda, grads).loss;
            }
        }
        batch_loss /= micro;
        grads.for_each([&](const std::string&, Mat& m) { m /= micro; });
        if (opts.clip_norm > 0.0) {
            double sq = 0.0;
            grads.for_each([&](const std::string&, Mat& m) { sq += m.squaredNorm(); });
            const double norm = std::sqrt(sq);
            if (norm > opts.clip_norm) {
                const double scale = opts.clip_norm / norm;
                grads.for_each([&](const std::string&, Mat& m) { m *= scale; });
            }
        }

        if (!std::isfinite(batch_loss)) {
            res.params = last_good;
            res.diverged = true;
            res.final_step = step - 1;
            return res;
        }
        adam.step(res.params, grads);
        loss_acc += batch_loss;
        ++loss_n;

        if (step % opts.val_interval == 0 || step == opts.steps) {
            CurvePoint pt;
            pt.step = step;
            pt.train_loss = loss_acc / std::max(1, loss_n);
            pt.val_loss = validation_loss(res.params, val_set, lambda);
            res.curve.push_back(pt);
            loss_acc = 0.0;
            loss_n = 0;
            if (std::isfinite(pt.val_loss)) last_good = res.params;
        }
    }
    res.final_step = opts.steps;
    return res;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "step,train_loss,val_loss\n";
    char buf[96];
    for (const auto& pt : curve) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", pt.step, pt.train_loss,
                      pt.val_loss);
        out += buf;
    }
    return out;
}

double token_accuracy(const PgnParams& params, const std::vector<Example>& examples) {
    std::size_t correct = 0, total = 0;
    for (const auto& ex : examples) {
        FwdTraceT<double> tr = run_forward<double>(params, ex, 0.0);
        for (const auto& st : tr.dec) {
            Eigen::Index arg = 0;
            st.p.maxCoeff(&arg);
            if (static_cast<int>(arg) == st.y) ++correct;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

CopyTask make_copy_task(const PgnConfig& cfg, std::size_t n_train, std::size_t n_val,
                        int src_len, int copy_k, std::uint64_t seed) {
    if (cfg.vocab_size <= 4) throw std::runtime_error("make_copy_task: vocab too small");
    CopyTask task;
    std::vector<std::string> regular;
    for (int i = 4; i < cfg.vocab_size; ++i) regular.push_back("w" + std::to_string(i));
    task.vocab = tok::Vocab::from_tokens(regular);

    DetRng rng(seed);
    auto gen_example = [&]() {
        Example ex;
        for (int i = 0; i < src_len; ++i) {
            const int id = 4 + static_cast<int>(rng.bounded(
                                   static_cast<std::uint64_t>(cfg.vocab_size - 4)));
            ex.src_in.push_back(id);
            ex.src_ext.push_back(id);
        }
        ex.tgt_in.push_back(tok::Vocab::kBos);
        for (int k = 0; k < copy_k; ++k) {
            ex.tgt_ext.push_back(ex.src_in[static_cast<std::size_t>(k)]);
            ex.tgt_in.push_back(ex.src_in[static_cast<std::size_t>(k)]);
        }
        ex.tgt_ext.push_back(tok::Vocab::kEos);
        return ex;
    };
    for (std::size_t i = 0; i < n_train; ++i) task.train_set.push_back(gen_example());
    for (std::size_t i = 0; i < n_val; ++i) task.val_set.push_back(gen_example());
    return task;
}

// ---------------------------------------------------------------------------
// checkpoints

void save_checkpoint(const std::string& path, const PgnParams& params,
                     const tok::Vocab& vocab, tok::Scheme scheme) {
    nlohmann::json j;
    j["version"] = 1;
    const PgnConfig& cfg = params.config;
    j["config"] = {{"vocab_size", cfg.vocab_size},
                   {"embed_dim", cfg.embed_dim},
                   {"hidden_dim", cfg.hidden_dim},
                   {"max_src_len", cfg.max_src_len},
                   {"max_tgt_len", cfg.max_tgt_len},
                   {"coverage_weight", cfg.coverage_weight},
                   {"cell", cfg.cell == CellKind::Lstm ? "lstm" : "gru"},
                   {"seed", cfg.seed}};
    j["vocab"] = vocab.token_of;
    j["scheme"] = scheme == tok::Scheme::Word ? "word" : "bpe";
    nlohmann::json tensors = nlohmann::json::object();
    params.for_each([&](const std::string& name, const Mat& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        tensors[name] = std::move(rows);
    });
    j["tensors"] = std::move(tensors);
    io::write_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(io::read_file(path));
    if (j.value("version", 0) != 1) throw std::runtime_error("checkpoint: unknown version");
    PgnConfig cfg;
    const auto& jc = j.at("config");
    cfg.vocab_size = jc.at("vocab_size").get<int>();
    cfg.embed_dim = jc.at("embed_dim").get<int>();
    cfg.hidden_dim = jc.at("hidden_dim").get<int>();
    cfg.max_src_len = jc.at("max_src_len").get<int>();
    cfg.max_tgt_len = jc.at("max_tgt_len").get<int>();
    cfg.coverage_weight = jc.at("coverage_weight").get<double>();
    cfg.cell = jc.at("cell").get<std::string>() == "gru" ? CellKind::Gru : CellKind::Lstm;
    cfg.seed = jc.at("seed").get<std::uint64_t>();

    Checkpoint ck;
    ck.params = PgnParams::zeros_like(cfg);
    const auto& tensors = j.at("tensors");
    ck.params.for_each([&](const std::string& name, Mat& m) {
        const auto& rows = tensors.at(name);
        if (static_cast<Eigen::Index>(rows.size()) != m.rows()) {
            throw std::runtime_error("checkpoint: bad row count for " + name);
        }
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const auto& row = rows.at(static_cast<std::size_t>(r));
            if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
                throw std::runtime_error("checkpoint: bad column count for " + name);
            }
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
            }
        }
    });
    const auto toks = j.at("vocab").get<std::vector<std::string>>();
    if (toks.size() < 4 || static_cast<int>(toks.size()) != cfg.vocab_size) {
        throw std::runtime_error("checkpoint: vocab size mismatch");
    }
    ck.vocab = tok::Vocab::from_tokens({toks.begin() + 4, toks.end()});
    ck.scheme = j.at("scheme").get<std::string>() == "bpe" ? tok::Scheme::Bpe
                                                           : tok::Scheme::Word;
    return ck;
}

}  // namespace headliner::pgn
