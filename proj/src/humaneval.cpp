#include "headliner/humaneval.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace headliner::humaneval {

std::string choice_name(Choice c) {
    switch (c) {
        case Choice::Model: return "MODEL";
        case Choice::Human: return "HUMAN";
        case Choice::Draw: return "DRAW";
    }
    return "DRAW";
}

namespace {

std::string tsv_safe(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(c == '\t' || c == '\n' || c == '\r' ? ' ' : c);
    return out;
}

}  // namespace

TaskExport export_tasks(const std::vector<corpus::Article>& articles,
                        const std::vector<std::string>& model_headlines,
                        std::uint64_t seed) {
    if (articles.size() != model_headlines.size()) {
        throw std::runtime_error("export_tasks: alignment mismatch: " +
                                 std::to_string(articles.size()) + " articles vs " +
                                 std::to_string(model_headlines.size()) + " headlines");
    }
    std::mt19937_64 gen(seed);
    TaskExport out;
    out.task_lines.push_back("item_id\tarticle_text\theadline_left\theadline_right");
    out.key_lines.push_back("item_id\tleft_origin");
    for (std::size_t i = 0; i < articles.size(); ++i) {
        const auto& a = articles[i];
        const bool model_left = (gen() & 1) != 0;
        const std::string& left = model_left ? model_headlines[i] : a.title;
        const std::string& right = model_left ? a.title : model_headlines[i];
        out.task_lines.push_back(tsv_safe(a.id) + "\t" + tsv_safe(a.text) + "\t" +
                                 tsv_safe(left) + "\t" + tsv_safe(right));
        out.key_lines.push_back(tsv_safe(a.id) + "\t" + (model_left ? "MODEL" : "HUMAN"));
    }
    return out;
}

std::vector<VoteRecord> parse_votes_tsv(const std::vector<std::string>& lines) {
    std::vector<VoteRecord> votes;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string& line = lines[ln];
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (ln == 0 && !fields.empty() && fields[0] == "item_id") continue;  // header
        if (fields.size() != 3) {
            throw std::runtime_error("votes: line " + std::to_string(ln + 1) +
                                     ": expected 3 tab-separated fields");
        }
        VoteRecord v;
        v.item_id = fields[0];
        v.annotator_id = fields[1];
        if (fields[2] == "MODEL") v.choice = Choice::Model;
        else if (fields[2] == "HUMAN") v.choice = Choice::Human;
        else if (fields[2] == "DRAW") v.choice = Choice::Draw;
        else {
            throw std::runtime_error("votes: line " + std::to_string(ln + 1) +
                                     ": unknown choice '" + fields[2] + "'");
        }
        votes.push_back(std::move(v));
    }
    return votes;
}

EvalSummary aggregate(const std::vector<VoteRecord>& votes, const AggregateOptions& opts) {
    if (opts.quorum < 1 || opts.supermajority < 1) {
        throw std::runtime_error("aggregate: quorum and supermajority must be >= 1");
    }
    struct ItemTally {
        int model = 0, human = 0, draw = 0;
        std::set<std::string> annotators;
        int total() const { return model + human + draw; }
    };
    std::map<std::string, ItemTally> items;  // ordered for stable reporting
    for (const auto& v : votes) {
        ItemTally& t = items[v.item_id];
        if (!t.annotators.insert(v.annotator_id).second) {
            throw std::runtime_error("aggregate: duplicate vote for item '" + v.item_id +
                                     "' by annotator '" + v.annotator_id + "'");
        }
        switch (v.choice) {
            case Choice::Model: ++t.model; break;
            case Choice::Human: ++t.human; break;
            case Choice::Draw: ++t.draw; break;
        }
    }

    EvalSummary s;
    std::size_t model_w = 0, human_w = 0, draw_w = 0, model_sm = 0, human_sm = 0;
    long long pooled_m = 0, pooled_h = 0, pooled_d = 0;
    for (const auto& [id, t] : items) {
        if (t.total() != opts.quorum) {
            s.excluded_items.push_back(id);
            continue;
        }
        pooled_m += t.model;
        pooled_h += t.human;
        pooled_d += t.draw;
        Choice outcome = Choice::Draw;
        if (opts.rule == OutcomeRule::Plurality) {
            if (t.model > t.human && t.model > t.draw) outcome = Choice::Model;
            else if (t.human > t.model && t.human > t.draw) outcome = Choice::Human;
            // remaining cases, including plurality ties, stay draws
        } else {
            if (t.model >= opts.majority_threshold) outcome = Choice::Model;
            else if (t.human >= opts.majority_threshold) outcome = Choice::Human;
        }
        s.item_outcomes[id] = outcome;
        if (outcome == Choice::Model) ++model_w;
        else if (outcome == Choice::Human) ++human_w;
        else ++draw_w;
        if (t.model >= opts.supermajority) ++model_sm;
        if (t.human >= opts.supermajority) ++human_sm;
    }
    s.n_items = s.item_outcomes.size();
    if (s.n_items > 0) {
        const auto denom = static_cast<double>(s.n_items);
        s.model_win_rate = static_cast<double>(model_w) / denom;
        s.human_win_rate = static_cast<double>(human_w) / denom;
        s.draw_rate = static_cast<double>(draw_w) / denom;
        s.model_supermajority_rate = static_cast<double>(model_sm) / denom;
        s.human_supermajority_rate = static_cast<double>(human_sm) / denom;
        const auto pooled_total = static_cast<double>(pooled_m + pooled_h + pooled_d);
        s.pooled_model_fraction = static_cast<double>(pooled_m) / pooled_total;
        s.pooled_human_fraction = static_cast<double>(pooled_h) / pooled_total;
        s.pooled_draw_fraction = static_cast<double>(pooled_d) / pooled_total;
    }
    return s;
}

std::string summary_to_json(const EvalSummary& s) {
    nlohmann::json j;
    j["n_items"] = s.n_items;
    j["model_win_rate"] = s.model_win_rate;
    j["draw_rate"] = s.draw_rate;
    j["human_win_rate"] = s.human_win_rate;
    j["model_supermajority_rate"] = s.model_supermajority_rate;
    j["human_supermajority_rate"] = s.human_supermajority_rate;
    j["pooled_vote_fractions"] = {{"model", s.pooled_model_fraction},
                                  {"draw", s.pooled_draw_fraction},
                                  {"human", s.pooled_human_fraction}};
    nlohmann::json outcomes = nlohmann::json::object();
    for (const auto& [id, c] : s.item_outcomes) outcomes[id] = choice_name(c);
    j["item_outcomes"] = outcomes;
    j["excluded_items"] = s.excluded_items;
    return j.dump(2) + "\n";
}

}  // namespace headliner::humaneval
