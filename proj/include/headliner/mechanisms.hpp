#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "headliner/tokenize.hpp"

namespace headliner::mech {

// Multi-sentence encoder input: [CLS] tok.. [SEP] per sentence, with
// segment ids alternating 0,1,0,1,.. across sentences.
struct EncodedDoc {
    std::vector<int> token_ids;
    std::vector<int> segment_ids;
    std::vector<std::size_t> cls_positions;
    std::size_t attention_length = 0;
};

extern const std::string kClsToken;  // "[CLS]"
extern const std::string kSepToken;  // "[SEP]"

// Truncation never splits a [CLS]/[SEP] pair: a trailing sentence that
// does not fit is dropped whole. A first sentence longer than max_len
// keeps its [CLS]/[SEP] and loses tokens instead.
EncodedDoc encode_document(const std::vector<tok::TokenSeq>& sentences,
                           const tok::Vocab& vocab, std::size_t max_len);

std::string encoded_doc_to_json(const EncodedDoc& doc);

struct ScheduleConfig {
    double base_lr = 2e-3;
    std::int64_t warmup_steps = 20000;
};

// base_lr * min(step^-0.5, step * warmup^-1.5); peaks exactly at
// step == warmup_steps.
double noam_lr(std::int64_t step, const ScheduleConfig& cfg);

struct DualScheduleConfig {
    ScheduleConfig encoder{2e-3, 20000};
    ScheduleConfig decoder{0.2, 10000};
};

struct LrPair {
    double encoder = 0.0;
    double decoder = 0.0;
};

LrPair dual_schedule(std::int64_t step, const DualScheduleConfig& cfg = {});

enum class NoiseKind { ShuffleSentences, Rotate, Infill };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::ShuffleSentences;
    std::string mask_token = "<mask>";
    double span_length_mean = 3.0;   // infill
    double mask_fraction = 0.3;      // infill
    std::uint64_t seed = 0;
};

// shuffle: permutes sentence order (multiset preserved); rotate: the
// document restarts at a uniform token offset, cyclic order preserved;
// infill: non-overlapping spans with Poisson-like lengths each collapse
// to one mask token until mask_fraction of tokens is covered.
tok::TokenSeq corrupt(const std::vector<tok::TokenSeq>& sentences, const NoiseSpec& spec);

}  // namespace headliner::mech
