#include "headliner/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace headliner::mech {

const std::string kClsToken = "[CLS]";
const std::string kSepToken = "[SEP]";

EncodedDoc encode_document(const std::vector<tok::TokenSeq>& sentences,
                           const tok::Vocab& vocab, std::size_t max_len) {
    if (sentences.empty()) throw std::runtime_error("encode_document: no sentences");
    if (!vocab.contains(kClsToken) || !vocab.contains(kSepToken)) {
        throw std::runtime_error("encode_document: vocab lacks [CLS]/[SEP]");
    }
    if (max_len < 2) throw std::runtime_error("encode_document: max_len must be >= 2");
    const int cls_id = vocab.id(kClsToken);
    const int sep_id = vocab.id(kSepToken);

    EncodedDoc doc;
    int segment = 0;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        const auto& toks = sentences[s].tokens;
        std::size_t keep = toks.size();
        const std::size_t needed = doc.token_ids.size() + keep + 2;
        if (needed > max_len) {
            if (s > 0) break;               // drop the trailing sentences whole
            keep = max_len - 2;             // first sentence: truncate its tokens
        }
        doc.cls_positions.push_back(doc.token_ids.size());
        doc.token_ids.push_back(cls_id);
        doc.segment_ids.push_back(segment);
        for (std::size_t i = 0; i < keep; ++i) {
            doc.token_ids.push_back(vocab.id(toks[i]));
            doc.segment_ids.push_back(segment);
        }
        doc.token_ids.push_back(sep_id);
        doc.segment_ids.push_back(segment);
        segment ^= 1;
    }
    doc.attention_length = doc.token_ids.size();
    return doc;
}

std::string encoded_doc_to_json(const EncodedDoc& doc) {
    nlohmann::json j;
    j["token_ids"] = doc.token_ids;
    j["segment_ids"] = doc.segment_ids;
    j["cls_positions"] = doc.cls_positions;
    j["attention_length"] = doc.attention_length;
    return j.dump();
}

double noam_lr(std::int64_t step, const ScheduleConfig& cfg) {
    if (step < 1) throw std::runtime_error("noam_lr: step must be >= 1");
    if (cfg.base_lr <= 0.0 || cfg.warmup_steps < 1) {
        throw std::runtime_error("noam_lr: invalid schedule config");
    }
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(cfg.warmup_steps);
    return cfg.base_lr * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

LrPair dual_schedule(std::int64_t step, const DualScheduleConfig& cfg) {
    return {noam_lr(step, cfg.encoder), noam_lr(step, cfg.decoder)};
}

namespace {

class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Poisson via inversion; zero-length draws become 1
    std::size_t span_length(double mean) {
        const double limit = std::exp(-mean);
        double p = 1.0;
        std::size_t k = 0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        const std::size_t len = k - 1;
        return len == 0 ? 1 : len;
    }

private:
    std::mt19937_64 gen_;
};

std::vector<std::string> flatten(const std::vector<tok::TokenSeq>& sentences) {
    std::vector<std::string> toks;
    for (const auto& s : sentences) toks.insert(toks.end(), s.tokens.begin(), s.tokens.end());
    return toks;
}

tok::TokenSeq shuffle_sentences(const std::vector<tok::TokenSeq>& sentences, DetRng& rng) {
    std::vector<std::size_t> order(sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.bounded(i + 1));
        std::swap(order[i], order[j]);
    }
    tok::TokenSeq out;
    for (std::size_t i : order) {
        out.tokens.insert(out.tokens.end(), sentences[i].tokens.begin(),
                          sentences[i].tokens.end());
    }
    return out;
}

tok::TokenSeq rotate(const std::vector<tok::TokenSeq>& sentences, DetRng& rng) {
    auto toks = flatten(sentences);
    tok::TokenSeq out;
    if (toks.empty()) return out;
    const std::size_t offset = static_cast<std::size_t>(rng.bounded(toks.size()));
    out.tokens.reserve(toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i) {
        out.tokens.push_back(toks[(offset + i) % toks.size()]);
    }
    return out;
}

tok::TokenSeq infill(const std::vector<tok::TokenSeq>& sentences, const NoiseSpec& spec,
                     DetRng& rng) {
    auto toks = flatten(sentences);
    tok::TokenSeq out;
    const std::size_t n = toks.size();
    if (n == 0) return out;

    // span_id[i]: 0 = unmasked, otherwise the 1-based span it belongs to
    std::vector<std::size_t> span_id(n, 0);
    std::size_t masked = 0;
    std::size_t next_span = 1;
    const auto target = static_cast<std::size_t>(
        std::llround(spec.mask_fraction * static_cast<double>(n)));
    std::size_t attempts = 0;
    while (masked < target && attempts < 20 * n + 100) {
        ++attempts;
        const std::size_t start = static_cast<std::size_t>(rng.bounded(n));
        if (span_id[start] != 0) continue;
        std::size_t len = rng.span_length(spec.span_length_mean);
        len = std::min(len, target - masked);
        if (len == 0) len = 1;
        std::size_t end = start;
        while (end < n && end - start < len && span_id[end] == 0) ++end;
        for (std::size_t i = start; i < end; ++i) span_id[i] = next_span;
        masked += end - start;
        ++next_span;
    }

    std::size_t last_span = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (span_id[i] == 0) {
            out.tokens.push_back(toks[i]);
            last_span = 0;
        } else if (span_id[i] != last_span) {
            out.tokens.push_back(spec.mask_token);
            last_span = span_id[i];
        }
    }
    return out;
}

}  // namespace

tok::TokenSeq corrupt(const std::vector<tok::TokenSeq>& sentences, const NoiseSpec& spec) {
    DetRng rng(spec.seed);
    if (sentences.empty() || flatten(sentences).empty()) {
        tok::TokenSeq out;
        out.tokens = flatten(sentences);
        return out;
    }
    switch (spec.kind) {
        case NoiseKind::ShuffleSentences: return shuffle_sentences(sentences, rng);
        case NoiseKind::Rotate: return rotate(sentences, rng);
        case NoiseKind::Infill: return infill(sentences, spec, rng);
    }
    throw std::runtime_error("corrupt: unknown noise kind");
}

}  // namespace headliner::mech
