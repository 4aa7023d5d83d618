#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace headliner::tok {

enum class Scheme { Word, Bpe };

struct TokenSeq {
    std::vector<std::string> tokens;
    Scheme scheme = Scheme::Word;
};

// Reserved ids occupy the lowest indices and are never merged away.
struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;

    static const std::string& pad_token();
    static const std::string& unk_token();
    static const std::string& bos_token();
    static const std::string& eos_token();

    std::vector<std::string> token_of;           // id -> token
    std::unordered_map<std::string, int> id_of;  // token -> id

    Vocab();  // reserved tokens only

    static Vocab from_tokens(const std::vector<std::string>& tokens);

    int add(const std::string& token);  // idempotent, returns id
    int id(const std::string& token) const;  // kUnk when absent
    bool contains(const std::string& token) const;
    int size() const { return static_cast<int>(token_of.size()); }
};

// Splits on whitespace; punctuation becomes separate tokens; '.' and ','
// between digits stay inside the number token (e.g. "28,04").
TokenSeq word_tokenize(const std::string& normalized_text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace headliner::tok
