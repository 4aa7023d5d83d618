#include "headliner/bpe.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "headliner/io.hpp"
#include "headliner/unicode.hpp"

namespace headliner::tok {

namespace {

using SymPair = std::pair<std::string, std::string>;

struct SymPairHash {
    std::size_t operator()(const SymPair& p) const {
        std::size_t h = std::hash<std::string>{}(p.first);
        return h * 1099511628211ULL ^ std::hash<std::string>{}(p.second);
    }
};

std::vector<std::string> word_to_symbols(const std::string& word, const std::string& marker) {
    std::vector<std::string> syms;
    for (char32_t c : uni::decode_utf8(word)) {
        syms.push_back(uni::encode_utf8(std::u32string(1, c)));
    }
    syms.push_back(marker);
    return syms;
}

struct HeapEntry {
    long long count;
    SymPair pair;
};

// max count first; equal counts resolve to the lexicographically
// smallest pair
struct HeapLess {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
        if (a.count != b.count) return a.count < b.count;
        return a.pair > b.pair;
    }
};

class PairCounter {
public:
    void add_word(std::size_t w, const std::vector<std::string>& syms, long long freq) {
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            SymPair p{syms[i], syms[i + 1]};
            counts_[p] += freq;
            index_[p].insert(w);
            dirty_.push_back(p);
        }
    }

    void remove_word(std::size_t w, const std::vector<std::string>& syms, long long freq) {
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            SymPair p{syms[i], syms[i + 1]};
            auto it = counts_.find(p);
            if (it != counts_.end()) {
                it->second -= freq;
                if (it->second <= 0) counts_.erase(it);
                else dirty_.push_back(p);
            }
            auto ix = index_.find(p);
            if (ix != index_.end()) {
                ix->second.erase(w);
                if (ix->second.empty()) index_.erase(ix);
            }
        }
    }

    void refresh_heap() {
        for (const auto& p : dirty_) {
            auto it = counts_.find(p);
            if (it != counts_.end()) heap_.push({it->second, p});
        }
        dirty_.clear();
    }

    // highest count, lexicographic tie-break; lazily discards stale
    // heap entries
    bool top(SymPair& out, long long& count) {
        refresh_heap();
        while (!heap_.empty()) {
            HeapEntry e = heap_.top();
            auto it = counts_.find(e.pair);
            if (it == counts_.end() || it->second != e.count) {
                heap_.pop();
                continue;
            }
            out = e.pair;
            count = e.count;
            return true;
        }
        return false;
    }

    const std::unordered_set<std::size_t>& words_with(const SymPair& p) {
        static const std::unordered_set<std::size_t> empty;
        auto it = index_.find(p);
        return it == index_.end() ? empty : it->second;
    }

private:
    std::unordered_map<SymPair, long long, SymPairHash> counts_;
    std::unordered_map<SymPair, std::unordered_set<std::size_t>, SymPairHash> index_;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap_;
    std::vector<SymPair> dirty_;
};

std::vector<std::string> apply_merge(const std::vector<std::string>& syms, const SymPair& p) {
    std::vector<std::string> out;
    out.reserve(syms.size());
    std::size_t i = 0;
    while (i < syms.size()) {
        if (i + 1 < syms.size() && syms[i] == p.first && syms[i + 1] == p.second) {
            out.push_back(p.first + p.second);
            i += 2;
        } else {
            out.push_back(syms[i]);
            ++i;
        }
    }
    return out;
}

Vocab build_vocab(const std::vector<std::string>& alphabet,
                  const std::vector<SymPair>& merges) {
    Vocab v;
    for (const auto& s : alphabet) v.add(s);
    for (const auto& [l, r] : merges) v.add(l + r);
    return v;
}

}  // namespace

BpeModel bpe_train_counts(const std::vector<std::pair<std::string, long long>>& word_counts,
                          int num_merges) {
    if (word_counts.empty()) throw std::runtime_error("bpe_train: empty corpus");
    if (num_merges < 0) throw std::runtime_error("bpe_train: num_merges must be >= 0");

    BpeModel model;
    const std::string& marker = model.end_of_word_marker;

    std::vector<std::vector<std::string>> words;
    std::vector<long long> freqs;
    std::set<std::string> alphabet;
    words.reserve(word_counts.size());
    for (const auto& [w, f] : word_counts) {
        if (w.empty() || f <= 0) continue;
        auto syms = word_to_symbols(w, marker);
        for (const auto& s : syms) alphabet.insert(s);
        words.push_back(std::move(syms));
        freqs.push_back(f);
    }
    if (words.empty()) throw std::runtime_error("bpe_train: empty corpus");

    PairCounter counter;
    for (std::size_t w = 0; w < words.size(); ++w) counter.add_word(w, words[w], freqs[w]);

    for (int m = 0; m < num_merges; ++m) {
        SymPair best;
        long long count = 0;
        if (!counter.top(best, count) || count < 2) break;

        const auto affected = counter.words_with(best);
        std::vector<std::size_t> word_ids(affected.begin(), affected.end());
        std::sort(word_ids.begin(), word_ids.end());
        for (std::size_t w : word_ids) {
            counter.remove_word(w, words[w], freqs[w]);
            words[w] = apply_merge(words[w], best);
            counter.add_word(w, words[w], freqs[w]);
        }
        model.merges.push_back(best);
    }

    model.alphabet.assign(alphabet.begin(), alphabet.end());
    model.vocab = build_vocab(model.alphabet, model.merges);
    return model;
}

BpeModel bpe_train(const std::vector<TokenSeq>& corpus, int num_merges) {
    std::unordered_map<std::string, long long> counts;
    std::vector<std::string> order;  // first-seen order keeps training reproducible
    for (const auto& seq : corpus) {
        for (const auto& w : seq.tokens) {
            if (counts[w]++ == 0) order.push_back(w);
        }
    }
    std::vector<std::pair<std::string, long long>> word_counts;
    word_counts.reserve(order.size());
    for (const auto& w : order) word_counts.emplace_back(w, counts[w]);
    return bpe_train_counts(word_counts, num_merges);
}

TokenSeq bpe_encode(const BpeModel& model, const std::vector<std::string>& words) {
    std::unordered_map<std::string, int> rank;
    rank.reserve(model.merges.size());
    for (std::size_t i = 0; i < model.merges.size(); ++i) {
        rank.emplace(model.merges[i].first + "\x01" + model.merges[i].second,
                     static_cast<int>(i));
    }
    auto pair_rank = [&](const std::string& l, const std::string& r) -> int {
        auto it = rank.find(l + "\x01" + r);
        return it == rank.end() ? -1 : it->second;
    };

    TokenSeq out;
    out.scheme = Scheme::Bpe;
    for (const auto& word : words) {
        if (word.empty()) continue;
        auto syms = word_to_symbols(word, model.end_of_word_marker);
        // repeatedly apply the earliest-trained applicable merge
        while (syms.size() > 1) {
            int best_rank = -1;
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                int r = pair_rank(syms[i], syms[i + 1]);
                if (r >= 0 && (best_rank < 0 || r < best_rank)) best_rank = r;
            }
            if (best_rank < 0) break;
            syms = apply_merge(syms, model.merges[static_cast<std::size_t>(best_rank)]);
        }
        for (const auto& s : syms) {
            out.tokens.push_back(model.vocab.contains(s) ? s : Vocab::unk_token());
        }
    }
    return out;
}

std::vector<std::string> bpe_decode(const BpeModel& model, const TokenSeq& seq) {
    const std::string& marker = model.end_of_word_marker;
    std::vector<std::string> words;
    std::string cur;
    bool open = false;
    for (const auto& tok : seq.tokens) {
        std::size_t pos = tok.find(marker);
        if (pos != std::string::npos && pos + marker.size() != tok.size()) {
            throw std::runtime_error("bpe_decode: end-of-word marker inside token: " + tok);
        }
        if (pos != std::string::npos) {
            cur += tok.substr(0, pos);
            words.push_back(cur);
            cur.clear();
            open = false;
        } else {
            cur += tok;
            open = true;
        }
    }
    if (open) words.push_back(cur);  // truncated decoder output
    return words;
}

void save_bpe(const BpeModel& model, const std::string& path) {
    std::string out = "#version 1\n";
    for (const auto& [l, r] : model.merges) {
        if (l.find(' ') != std::string::npos || r.find(' ') != std::string::npos) {
            throw std::runtime_error("save_bpe: merge symbol contains a space");
        }
        out += l + " " + r + "\n";
    }
    io::write_file(path, out);

    nlohmann::json side;
    side["alphabet"] = model.alphabet;
    side["end_of_word_marker"] = model.end_of_word_marker;
    side["reserved"] = {Vocab::pad_token(), Vocab::unk_token(), Vocab::bos_token(),
                        Vocab::eos_token()};
    io::write_file(path + ".vocab.json", side.dump(2) + "\n");
}

BpeModel load_bpe(const std::string& path) {
    auto lines = io::read_lines(path);
    if (lines.empty() || lines[0] != "#version 1") {
        throw std::runtime_error("load_bpe: missing '#version 1' header in " + path);
    }
    BpeModel model;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::size_t sp = lines[i].find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 >= lines[i].size()) {
            throw std::runtime_error("load_bpe: malformed merge line: " + lines[i]);
        }
        model.merges.emplace_back(lines[i].substr(0, sp), lines[i].substr(sp + 1));
    }
    nlohmann::json side = nlohmann::json::parse(io::read_file(path + ".vocab.json"));
    model.alphabet = side.at("alphabet").get<std::vector<std::string>>();
    model.end_of_word_marker = side.at("end_of_word_marker").get<std::string>();
    model.vocab = build_vocab(model.alphabet, model.merges);
    return model;
}

}  // namespace headliner::tok
