#include "headliner/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "headliner/io.hpp"

namespace headliner::metrics {

namespace {

constexpr char kSep = '\x01';

std::vector<std::string> ngrams(const std::vector<std::string>& toks, int n) {
    std::vector<std::string> grams;
    if (n < 1 || toks.size() < static_cast<std::size_t>(n)) return grams;
    grams.reserve(toks.size() - static_cast<std::size_t>(n) + 1);
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
        std::string g = toks[i];
        for (int k = 1; k < n; ++k) {
            g.push_back(kSep);
            g += toks[i + static_cast<std::size_t>(k)];
        }
        grams.push_back(std::move(g));
    }
    return grams;
}

std::unordered_map<std::string, std::size_t> count_map(const std::vector<std::string>& grams) {
    std::unordered_map<std::string, std::size_t> m;
    m.reserve(grams.size());
    for (const auto& g : grams) ++m[g];
    return m;
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

RougeScore rouge_n(const tok::TokenSeq& ref, const tok::TokenSeq& hyp, int n) {
    RougeScore s;
    auto ref_grams = ngrams(ref.tokens, n);
    auto hyp_grams = ngrams(hyp.tokens, n);
    if (ref_grams.empty() || hyp_grams.empty()) return s;

    auto ref_counts = count_map(ref_grams);
    std::size_t overlap = 0;
    for (const auto& g : hyp_grams) {
        auto it = ref_counts.find(g);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    s.precision = static_cast<double>(overlap) / static_cast<double>(hyp_grams.size());
    s.recall = static_cast<double>(overlap) / static_cast<double>(ref_grams.size());
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

RougeScore rouge_l(const tok::TokenSeq& ref, const tok::TokenSeq& hyp) {
    RougeScore s;
    const auto& a = ref.tokens;
    const auto& b = hyp.tokens;
    if (a.empty() || b.empty()) return s;

    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const auto lcs = static_cast<double>(prev[b.size()]);
    s.precision = lcs / static_cast<double>(b.size());
    s.recall = lcs / static_cast<double>(a.size());
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

namespace {

struct BleuStats {
    std::array<std::size_t, 4> clipped{0, 0, 0, 0};
    std::array<std::size_t, 4> total{0, 0, 0, 0};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;

    void accumulate(const BleuStats& o) {
        for (int n = 0; n < 4; ++n) {
            clipped[static_cast<std::size_t>(n)] += o.clipped[static_cast<std::size_t>(n)];
            total[static_cast<std::size_t>(n)] += o.total[static_cast<std::size_t>(n)];
        }
        hyp_len += o.hyp_len;
        ref_len += o.ref_len;
    }
};

BleuStats bleu_pair_stats(const tok::TokenSeq& ref, const tok::TokenSeq& hyp) {
    BleuStats st;
    st.hyp_len = hyp.tokens.size();
    st.ref_len = ref.tokens.size();
    for (int n = 1; n <= 4; ++n) {
        auto hyp_grams = ngrams(hyp.tokens, n);
        if (hyp_grams.empty()) continue;
        auto ref_counts = count_map(ngrams(ref.tokens, n));
        auto hyp_counts = count_map(hyp_grams);
        std::size_t clipped = 0;
        for (const auto& [g, c] : hyp_counts) {
            auto it = ref_counts.find(g);
            if (it != ref_counts.end()) clipped += std::min(c, it->second);
        }
        st.clipped[static_cast<std::size_t>(n - 1)] = clipped;
        st.total[static_cast<std::size_t>(n - 1)] = hyp_grams.size();
    }
    return st;
}

BleuBreakdown bleu_from_stats(const BleuStats& st, bool smoothing = false) {
    BleuBreakdown out;
    out.hyp_len = st.hyp_len;
    out.ref_len = st.ref_len;
    if (st.hyp_len == 0) return out;

    out.bp = st.hyp_len >= st.ref_len
                 ? 1.0
                 : std::exp(1.0 - static_cast<double>(st.ref_len) /
                                      static_cast<double>(st.hyp_len));

    double log_sum = 0.0;
    int orders = 0;
    bool zero_precision = false;
    for (int n = 0; n < 4; ++n) {
        const auto i = static_cast<std::size_t>(n);
        if (st.total[i] == 0) continue;
        out.included[i] = true;
        double clipped = static_cast<double>(st.clipped[i]);
        double total = static_cast<double>(st.total[i]);
        if (smoothing && n > 0 && st.clipped[i] == 0) {
            clipped += 1.0;  // add-one on zero-match higher orders
            total += 1.0;
        }
        out.p_n[i] = clipped / total;
        if (out.p_n[i] <= 0.0) {
            zero_precision = true;
            continue;
        }
        log_sum += std::log(out.p_n[i]);
        ++orders;
    }
    if (orders == 0 || zero_precision) {
        out.bleu = 0.0;
        return out;
    }
    out.bleu = 100.0 * out.bp * std::exp(log_sum / orders);
    return out;
}

}  // namespace

BleuBreakdown corpus_bleu(
    const std::vector<std::pair<tok::TokenSeq, tok::TokenSeq>>& ref_hyp_pairs,
    bool smoothing) {
    if (ref_hyp_pairs.empty()) throw std::runtime_error("corpus_bleu: empty corpus");
    BleuStats pooled;
    for (const auto& [ref, hyp] : ref_hyp_pairs) pooled.accumulate(bleu_pair_stats(ref, hyp));
    return bleu_from_stats(pooled, smoothing);
}

std::optional<double> novelty(const tok::TokenSeq& source, const tok::TokenSeq& headline, int n) {
    auto head_grams = ngrams(headline.tokens, n);
    if (head_grams.empty()) return std::nullopt;
    std::unordered_set<std::string> head_set(head_grams.begin(), head_grams.end());
    auto src_grams = ngrams(source.tokens, n);
    std::unordered_set<std::string> src_set(src_grams.begin(), src_grams.end());
    std::size_t novel = 0;
    for (const auto& g : head_set) {
        if (!src_set.count(g)) ++novel;
    }
    return static_cast<double>(novel) / static_cast<double>(head_set.size());
}

double repetition_rate(const std::vector<tok::TokenSeq>& headlines, int n) {
    if (headlines.empty()) return 0.0;
    std::size_t flagged = 0;
    for (const auto& h : headlines) {
        auto counts = count_map(ngrams(h.tokens, n));
        for (const auto& [g, c] : counts) {
            if (c >= 2) {
                ++flagged;
                break;
            }
        }
    }
    return static_cast<double>(flagged) / static_cast<double>(headlines.size());
}

namespace {

struct ExampleStats {
    double f1_1 = 0.0;
    double f1_2 = 0.0;
    double f1_l = 0.0;
    BleuStats bleu;
    std::array<std::optional<double>, 4> novelty;  // n=1..4
    bool repeated = false;
};

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double idx = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(idx));
    const auto hi = static_cast<std::size_t>(std::ceil(idx));
    const double w = idx - std::floor(idx);
    return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace

EvaluateResult evaluate_corpus(const std::vector<tok::TokenSeq>& refs,
                               const std::vector<tok::TokenSeq>& hyps,
                               const std::vector<tok::TokenSeq>& sources,
                               const EvaluateOptions& opts) {
    if (refs.size() != hyps.size()) {
        throw std::runtime_error("evaluate_corpus: refs/hyps length mismatch: " +
                                 std::to_string(refs.size()) + " refs vs " +
                                 std::to_string(hyps.size()) + " hyps");
    }
    if (!sources.empty() && sources.size() != refs.size()) {
        throw std::runtime_error("evaluate_corpus: sources length mismatch: " +
                                 std::to_string(sources.size()) + " sources vs " +
                                 std::to_string(refs.size()) + " refs");
    }
    if (refs.empty()) throw std::runtime_error("evaluate_corpus: empty corpus");

    const bool with_novelty = opts.novelty_profile && !sources.empty();
    const std::size_t n_ex = refs.size();
    std::vector<ExampleStats> stats(n_ex);
    io::parallel_for(n_ex, opts.jobs, [&](std::size_t i) {
        ExampleStats& st = stats[i];
        st.f1_1 = rouge_n(refs[i], hyps[i], 1).f1;
        st.f1_2 = rouge_n(refs[i], hyps[i], 2).f1;
        st.f1_l = rouge_l(refs[i], hyps[i]).f1;
        st.bleu = bleu_pair_stats(refs[i], hyps[i]);
        if (with_novelty) {
            for (int n = 1; n <= 4; ++n) {
                st.novelty[static_cast<std::size_t>(n - 1)] = novelty(sources[i], hyps[i], n);
            }
        }
        auto counts = count_map(ngrams(hyps[i].tokens, opts.repetition_n));
        for (const auto& [g, c] : counts) {
            if (c >= 2) {
                st.repeated = true;
                break;
            }
        }
    });

    // associative (sum, count) reduction; identical for any jobs setting
    MetricReport rep;
    double s1 = 0.0, s2 = 0.0, sl = 0.0;
    BleuStats pooled;
    std::array<double, 4> nov_sum{};
    std::array<std::size_t, 4> nov_n{};
    std::size_t repeated = 0;
    for (const auto& st : stats) {
        s1 += st.f1_1;
        s2 += st.f1_2;
        sl += st.f1_l;
        pooled.accumulate(st.bleu);
        for (int k = 0; k < 4; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            if (st.novelty[ki]) {
                nov_sum[ki] += *st.novelty[ki];
                ++nov_n[ki];
            }
        }
        if (st.repeated) ++repeated;
    }
    const auto denom = static_cast<double>(n_ex);
    rep.rouge1 = 100.0 * s1 / denom;
    rep.rouge2 = 100.0 * s2 / denom;
    rep.rougeL = 100.0 * sl / denom;
    rep.r_mean = (rep.rouge1 + rep.rouge2 + rep.rougeL) / 3.0;
    rep.bleu = bleu_from_stats(pooled, opts.bleu_smoothing);
    if (with_novelty) {
        for (int n = 1; n <= 4; ++n) {
            const auto ki = static_cast<std::size_t>(n - 1);
            if (nov_n[ki] > 0) rep.novelty[n] = nov_sum[ki] / static_cast<double>(nov_n[ki]);
        }
    }
    rep.repetition_rate = static_cast<double>(repeated) / denom;
    rep.n_examples = n_ex;
    rep.config["rouge"] = "token-level F1, macro-averaged, lowercase, no stemming";
    rep.config["bleu"] = std::string("corpus-level, max order 4, uniform weights, empty "
                                     "orders excluded, smoothing ") +
                         (opts.bleu_smoothing ? "add-one" : "off");
    rep.config["repetition_n"] = std::to_string(opts.repetition_n);

    EvaluateResult result;
    result.report = rep;

    if (opts.bootstrap > 0) {
        std::mt19937_64 gen(opts.bootstrap_seed);
        std::vector<double> b1, b2, bl, bm, bb;
        b1.reserve(static_cast<std::size_t>(opts.bootstrap));
        for (int b = 0; b < opts.bootstrap; ++b) {
            double r1 = 0.0, r2 = 0.0, rl = 0.0;
            BleuStats bs;
            for (std::size_t k = 0; k < n_ex; ++k) {
                const auto i = static_cast<std::size_t>(gen() % n_ex);
                r1 += stats[i].f1_1;
                r2 += stats[i].f1_2;
                rl += stats[i].f1_l;
                bs.accumulate(stats[i].bleu);
            }
            r1 = 100.0 * r1 / denom;
            r2 = 100.0 * r2 / denom;
            rl = 100.0 * rl / denom;
            b1.push_back(r1);
            b2.push_back(r2);
            bl.push_back(rl);
            bm.push_back((r1 + r2 + rl) / 3.0);
            bb.push_back(bleu_from_stats(bs, opts.bleu_smoothing).bleu);
        }
        auto interval = [&](const std::vector<double>& v) {
            return BootstrapInterval{percentile(v, 0.025), percentile(v, 0.975)};
        };
        result.intervals["rouge_1"] = interval(b1);
        result.intervals["rouge_2"] = interval(b2);
        result.intervals["rouge_l"] = interval(bl);
        result.intervals["r_mean"] = interval(bm);
        result.intervals["bleu"] = interval(bb);
    }
    return result;
}

std::string render_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
    std::size_t name_w = 5;  // "Model"
    for (const auto& [name, rep] : rows) name_w = std::max(name_w, name.size());
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %6s %6s %6s %7s %6s\n",
                  static_cast<int>(name_w), "Model", "R1", "R2", "RL", "R-mean", "BLEU");
    out += buf;
    for (const auto& [name, rep] : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %6.1f %6.1f %6.1f %7.1f %6.1f\n",
                      static_cast<int>(name_w), name.c_str(), rep.rouge1, rep.rouge2,
                      rep.rougeL, rep.r_mean, rep.bleu.bleu);
        out += buf;
    }
    return out;
}

std::string report_to_json(const MetricReport& report,
                           const std::map<std::string, BootstrapInterval>& intervals) {
    nlohmann::json j;
    j["rouge_1"] = report.rouge1;
    j["rouge_2"] = report.rouge2;
    j["rouge_l"] = report.rougeL;
    j["r_mean"] = report.r_mean;
    j["bleu"] = report.bleu.bleu;
    if (!report.novelty.empty()) {
        nlohmann::json nov = nlohmann::json::object();
        for (const auto& [n, v] : report.novelty) nov[std::to_string(n)] = v;
        j["novelty"] = nov;
    }
    j["repetition_rate"] = report.repetition_rate;
    j["n_examples"] = report.n_examples;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : report.config) cfg[k] = v;
    j["config"] = cfg;
    if (!intervals.empty()) {
        nlohmann::json iv = nlohmann::json::object();
        for (const auto& [k, v] : intervals) iv[k] = {v.lo, v.hi};
        j["intervals"] = iv;
    }
    return j.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    MetricReport rep;
    rep.rouge1 = j.at("rouge_1").get<double>();
    rep.rouge2 = j.at("rouge_2").get<double>();
    rep.rougeL = j.at("rouge_l").get<double>();
    rep.r_mean = j.at("r_mean").get<double>();
    rep.bleu.bleu = j.at("bleu").get<double>();
    if (j.contains("novelty")) {
        for (const auto& [k, v] : j["novelty"].items()) rep.novelty[std::stoi(k)] = v.get<double>();
    }
    rep.repetition_rate = j.value("repetition_rate", 0.0);
    rep.n_examples = j.value("n_examples", std::size_t{0});
    if (j.contains("config")) {
        for (const auto& [k, v] : j["config"].items()) {
            if (v.is_string()) rep.config[k] = v.get<std::string>();
        }
    }
    return rep;
}

}  // namespace headliner::metrics
