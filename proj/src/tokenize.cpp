#include "headliner/tokenize.hpp"

#include "headliner/unicode.hpp"

namespace headliner::tok {

const std::string& Vocab::pad_token() {
    static const std::string t = "<pad>";
    return t;
}
const std::string& Vocab::unk_token() {
    static const std::string t = "<unk>";
    return t;
}
const std::string& Vocab::bos_token() {
    static const std::string t = "<s>";
    return t;
}
const std::string& Vocab::eos_token() {
    static const std::string t = "</s>";
    return t;
}

Vocab::Vocab() {
    add(pad_token());
    add(unk_token());
    add(bos_token());
    add(eos_token());
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
    Vocab v;
    for (const auto& t : tokens) v.add(t);
    return v;
}

int Vocab::add(const std::string& token) {
    auto it = id_of.find(token);
    if (it != id_of.end()) return it->second;
    int id = static_cast<int>(token_of.size());
    token_of.push_back(token);
    id_of.emplace(token, id);
    return id;
}

int Vocab::id(const std::string& token) const {
    auto it = id_of.find(token);
    return it == id_of.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const { return id_of.count(token) > 0; }

namespace {

bool is_punct(char32_t c) {
    switch (c) {
        case U'.':
        case U',':
        case U':':
        case U';':
        case U'!':
        case U'?':
        case U'«':
        case U'»':
        case U'"':
        case U'(':
        case U')':
        case U'—':
        case U'-':
        case U'–':
        case U'…':
            return true;
        default:
            return false;
    }
}

}  // namespace

TokenSeq word_tokenize(const std::string& normalized_text) {
    TokenSeq out;
    out.scheme = Scheme::Word;
    const std::u32string cps = uni::decode_utf8(normalized_text);
    std::u32string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.tokens.push_back(uni::encode_utf8(cur));
            cur.clear();
        }
    };
    const std::size_t n = cps.size();
    for (std::size_t i = 0; i < n; ++i) {
        char32_t c = cps[i];
        if (uni::is_space(c)) {
            flush();
            continue;
        }
        if (is_punct(c)) {
            const bool number_internal =
                (c == U'.' || c == U',') && !cur.empty() && uni::is_digit(cur.back()) &&
                i + 1 < n && uni::is_digit(cps[i + 1]);
            if (number_internal) {
                cur.push_back(c);
                continue;
            }
            flush();
            out.tokens.push_back(uni::encode_utf8(std::u32string(1, c)));
            continue;
        }
        cur.push_back(c);
    }
    flush();
    return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace headliner::tok
