#pragma once

#include <set>
#include <string>
#include <vector>

#include "headliner/corpus.hpp"

namespace headliner::baseline {

struct FirstSentenceOptions {
    int max_tokens = 0;  // 0 disables truncation
    const std::set<std::string>* abbreviations = nullptr;  // nullptr -> defaults
};

// The article's first sentence verbatim; the whole text when no
// boundary exists; empty text gives an empty headline.
std::string first_sentence(const corpus::Article& article,
                           const FirstSentenceOptions& opts = {});

// One headline per article, in input order.
std::vector<std::string> run_baseline(const std::vector<corpus::Article>& articles,
                                      const std::string& generator,
                                      const FirstSentenceOptions& opts = {});

}  // namespace headliner::baseline
