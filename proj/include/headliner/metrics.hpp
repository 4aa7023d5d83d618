#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "headliner/tokenize.hpp"

namespace headliner::metrics {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct BleuBreakdown {
    std::array<double, 4> p_n{0.0, 0.0, 0.0, 0.0};  // modified precisions, n=1..4
    std::array<bool, 4> included{false, false, false, false};
    double bp = 1.0;
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    double bleu = 0.0;  // in [0, 100]
};

struct MetricReport {
    double rouge1 = 0.0;  // mean F1 x 100
    double rouge2 = 0.0;
    double rougeL = 0.0;
    double r_mean = 0.0;  // (rouge1 + rouge2 + rougeL) / 3
    BleuBreakdown bleu;
    std::map<int, double> novelty;  // n in 1..4 -> mean proportion; empty without sources
    double repetition_rate = 0.0;
    std::size_t n_examples = 0;
    std::map<std::string, std::string> config;
};

// Multiset n-gram overlap F1. Either side without n-grams scores zero.
RougeScore rouge_n(const tok::TokenSeq& ref, const tok::TokenSeq& hyp, int n);

// Longest-common-subsequence F1.
RougeScore rouge_l(const tok::TokenSeq& ref, const tok::TokenSeq& hyp);

// Corpus BLEU with clipped counts pooled before division. Orders whose
// pooled hypothesis n-gram count is zero are excluded from the
// geometric mean; a zero precision on an included order gives 0 unless
// `smoothing` is set, which applies add-one smoothing to zero-match
// orders above unigrams. Throws on an empty corpus.
BleuBreakdown corpus_bleu(const std::vector<std::pair<tok::TokenSeq, tok::TokenSeq>>& ref_hyp_pairs,
                          bool smoothing = false);

// Proportion of distinct headline n-grams absent from the source.
// Empty when the headline has fewer than n tokens.
std::optional<double> novelty(const tok::TokenSeq& source, const tok::TokenSeq& headline, int n);

// Fraction of headlines containing any n-gram at least twice.
double repetition_rate(const std::vector<tok::TokenSeq>& headlines, int n = 2);

struct EvaluateOptions {
    bool novelty_profile = true;  // requires sources
    bool bleu_smoothing = false;
    int repetition_n = 2;
    int jobs = 1;
    int bootstrap = 0;           // resamples for confidence intervals; 0 disables
    std::uint64_t bootstrap_seed = 13;
};

struct BootstrapInterval {
    double lo = 0.0;
    double hi = 0.0;
};

struct EvaluateResult {
    MetricReport report;
    std::map<std::string, BootstrapInterval> intervals;  // only with bootstrap > 0
};

// refs and hyps are aligned by index; sources may be empty (novelty is
// then omitted). Throws on a length mismatch.
EvaluateResult evaluate_corpus(const std::vector<tok::TokenSeq>& refs,
                               const std::vector<tok::TokenSeq>& hyps,
                               const std::vector<tok::TokenSeq>& sources,
                               const EvaluateOptions& opts = {});

std::string render_table(const std::vector<std::pair<std::string, MetricReport>>& rows);

std::string report_to_json(const MetricReport& report,
                           const std::map<std::string, BootstrapInterval>& intervals = {});
MetricReport report_from_json(const std::string& json_text);

}  // namespace headliner::metrics
