#include "headliner/baseline.hpp"

#include <stdexcept>

#include "headliner/tokenize.hpp"

namespace headliner::baseline {

std::string first_sentence(const corpus::Article& article, const FirstSentenceOptions& opts) {
    const std::string& text = article.text;
    if (text.empty()) return "";
    const auto& abbrevs = opts.abbreviations ? *opts.abbreviations
                                             : corpus::default_abbreviations();
    auto spans = corpus::split_sentences(text, abbrevs);
    std::string sent = spans.empty() ? text : text.substr(spans[0].start, spans[0].end - spans[0].start);
    if (opts.max_tokens > 0) {
        auto seq = tok::word_tokenize(sent);
        if (seq.tokens.size() > static_cast<std::size_t>(opts.max_tokens)) {
            seq.tokens.resize(static_cast<std::size_t>(opts.max_tokens));
            sent = tok::join_tokens(seq.tokens);
        }
    }
    return sent;
}

std::vector<std::string> run_baseline(const std::vector<corpus::Article>& articles,
                                      const std::string& generator,
                                      const FirstSentenceOptions& opts) {
    if (generator != "first-sentence") {
        throw std::runtime_error("unknown baseline generator: " + generator);
    }
    std::vector<std::string> out;
    out.reserve(articles.size());
    for (const auto& a : articles) out.push_back(first_sentence(a, opts));
    return out;
}

}  // namespace headliner::baseline
