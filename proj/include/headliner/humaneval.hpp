#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "headliner/corpus.hpp"

namespace headliner::humaneval {

enum class Choice { Model, Human, Draw };

std::string choice_name(Choice c);

struct VoteRecord {
    std::string item_id;
    std::string annotator_id;
    Choice choice = Choice::Draw;
};

struct EvalSummary {
    std::size_t n_items = 0;
    double model_win_rate = 0.0;
    double draw_rate = 0.0;
    double human_win_rate = 0.0;
    double model_supermajority_rate = 0.0;
    double human_supermajority_rate = 0.0;
    // pooled per-vote fractions, reported alongside the per-item plurality rates
    double pooled_model_fraction = 0.0;
    double pooled_draw_fraction = 0.0;
    double pooled_human_fraction = 0.0;
    std::map<std::string, Choice> item_outcomes;
    std::vector<std::string> excluded_items;  // wrong vote count
};

struct TaskExport {
    std::vector<std::string> task_lines;  // TSV: item_id, article_text, headline_left, headline_right
    std::vector<std::string> key_lines;   // TSV: item_id, left_origin (MODEL | HUMAN)
};

// Blinded pairwise comparison tasks: the model and reference headline
// appear in seeded-random left/right order; only the key file knows
// which is which. Throws on an alignment mismatch.
TaskExport export_tasks(const std::vector<corpus::Article>& articles,
                        const std::vector<std::string>& model_headlines,
                        std::uint64_t seed);

std::vector<VoteRecord> parse_votes_tsv(const std::vector<std::string>& lines);

enum class OutcomeRule {
    Plurality,  // most votes wins, ties are draws
    Majority,   // a side needs at least majority_threshold votes, else draw
};

struct AggregateOptions {
    int quorum = 9;
    int supermajority = 5;
    OutcomeRule rule = OutcomeRule::Plurality;
    int majority_threshold = 5;  // used by OutcomeRule::Majority
};

// Item outcome follows the configured rule (plurality by default).
// Items without exactly `quorum` votes are excluded and reported. A
// duplicate (item, annotator) pair is fatal.
EvalSummary aggregate(const std::vector<VoteRecord>& votes, const AggregateOptions& opts = {});

std::string summary_to_json(const EvalSummary& s);

}  // namespace headliner::humaneval
