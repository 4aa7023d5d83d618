#pragma once

#include <string>
#include <utility>
#include <vector>

#include "headliner/tokenize.hpp"

namespace headliner::tok {

struct BpeModel {
    std::vector<std::pair<std::string, std::string>> merges;  // training order
    std::string end_of_word_marker = "</w>";
    std::vector<std::string> alphabet;  // sorted single-codepoint symbols + marker
    Vocab vocab;                        // reserved + alphabet + merge products
};

// Iteratively merges the most frequent adjacent symbol pair; ties break
// to the lexicographically smallest pair; stops early once no pair
// occurs at least twice. Words start as codepoint sequences with the
// end-of-word marker appended. Throws on an empty corpus.
BpeModel bpe_train(const std::vector<TokenSeq>& corpus, int num_merges);

BpeModel bpe_train_counts(const std::vector<std::pair<std::string, long long>>& word_counts,
                          int num_merges);

// Symbols absent from the vocabulary (unknown characters) become <unk>.
TokenSeq bpe_encode(const BpeModel& model, const std::vector<std::string>& words);

// Inverse of encode for in-alphabet words. A marker inside a token
// interior is an error; a missing final marker closes the last word.
std::vector<std::string> bpe_decode(const BpeModel& model, const TokenSeq& seq);

void save_bpe(const BpeModel& model, const std::string& path);
BpeModel load_bpe(const std::string& path);

}  // namespace headliner::tok
