#include "headliner/corpus.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "headliner/io.hpp"
#include "headliner/unicode.hpp"

namespace headliner::corpus {

namespace {

using uni::decode_utf8;
using uni::encode_utf8;

const std::unordered_map<std::string, char32_t>& named_entities() {
    static const std::unordered_map<std::string, char32_t> table = {
        {"amp", U'&'},    {"lt", U'<'},     {"gt", U'>'},      {"quot", U'"'},
        {"apos", U'\''},  {"nbsp", 0x00A0}, {"laquo", U'«'},   {"raquo", U'»'},
        {"mdash", U'—'},  {"ndash", U'–'},  {"hellip", U'…'},  {"copy", U'©'},
        {"reg", U'®'},    {"deg", U'°'},    {"sect", U'§'},    {"middot", U'·'},
        {"bull", U'•'},   {"lsquo", U'‘'},  {"rsquo", U'’'},   {"ldquo", U'“'},
        {"rdquo", U'”'},  {"bdquo", U'„'},  {"shy", 0x00AD},   {"times", U'×'},
    };
    return table;
}

std::u32string decode_entities(const std::u32string& in) {
    std::u32string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        if (in[i] != U'&') {
            out.push_back(in[i++]);
            continue;
        }
        std::size_t semi = i + 1;
        while (semi < in.size() && semi - i <= 10 && in[semi] != U';') ++semi;
        if (semi >= in.size() || in[semi] != U';') {
            out.push_back(in[i++]);
            continue;
        }
        std::u32string name32 = in.substr(i + 1, semi - i - 1);
        std::string name = encode_utf8(name32);
        char32_t cp = 0;
        bool ok = false;
        if (name.size() > 1 && name[0] == '#') {
            int base = 10;
            std::size_t k = 1;
            if (name[1] == 'x' || name[1] == 'X') {
                base = 16;
                k = 2;
            }
            unsigned long v = 0;
            bool any = false;
            for (; k < name.size(); ++k) {
                char c = name[k];
                int d;
                if (c >= '0' && c <= '9') d = c - '0';
                else if (base == 16 && c >= 'a' && c <= 'f') d = c - 'a' + 10;
                else if (base == 16 && c >= 'A' && c <= 'F') d = c - 'A' + 10;
                else { any = false; break; }
                v = v * base + static_cast<unsigned long>(d);
                any = true;
            }
            if (any && v > 0 && v <= 0x10FFFF) {
                cp = static_cast<char32_t>(v);
                ok = true;
            }
        } else {
            auto it = named_entities().find(name);
            if (it != named_entities().end()) {
                cp = it->second;
                ok = true;
            }
        }
        if (ok) {
            out.push_back(cp);
            i = semi + 1;
        } else {
            out.push_back(in[i++]);
        }
    }
    return out;
}

bool tag_starts(const std::u32string& s, std::size_t i) {
    if (s[i] != U'<' || i + 1 >= s.size()) return false;
    char32_t c = s[i + 1];
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || c == U'/' || c == U'!';
}

}  // namespace

std::string strip_html(const std::string& text) {
    std::u32string in = decode_utf8(text);
    std::u32string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        if (tag_starts(in, i)) {
            std::size_t close = in.find(U'>', i + 1);
            if (close != std::u32string::npos) {
                out.push_back(U' ');  // keep a word boundary where the tag was
                i = close + 1;
                continue;
            }
        }
        out.push_back(in[i++]);
    }
    return encode_utf8(decode_entities(out));
}

std::string normalize(const std::string& text) {
    std::u32string cps = uni::compose_canonical(decode_utf8(text));
    std::u32string out;
    out.reserve(cps.size());
    bool pending_space = false;
    for (char32_t c : cps) {
        if (uni::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(uni::to_lower(c));
    }
    return encode_utf8(out);
}

std::string part_name(Part p) {
    switch (p) {
        case Part::Train: return "train";
        case Part::Val: return "val";
        case Part::Test: return "test";
    }
    return "train";
}

std::optional<Part> part_from_name(const std::string& name) {
    if (name == "train") return Part::Train;
    if (name == "val") return Part::Val;
    if (name == "test") return Part::Test;
    return std::nullopt;
}

LoadResult load_ria(const std::string& path) {
    LoadResult res;
    std::unordered_set<std::string> seen_ids;
    std::size_t index = 0;
    io::for_each_line(path, [&](const std::string& line) {
        const std::size_t line_index = index++;
        if (line.empty()) {
            ++res.stats.skipped;
            return;
        }
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("title") || !j.contains("text") ||
            !j["title"].is_string() || !j["text"].is_string()) {
            ++res.stats.skipped;
            return;
        }
        Article a;
        a.title = normalize(strip_html(j["title"].get<std::string>()));
        a.text = normalize(strip_html(j["text"].get<std::string>()));
        if (a.title.empty() || a.text.empty()) {
            ++res.stats.skipped;
            return;
        }
        if (j.contains("id") && j["id"].is_string()) a.id = j["id"].get<std::string>();
        else a.id = std::to_string(line_index);
        if (a.id.empty() || !seen_ids.insert(a.id).second) {
            ++res.stats.skipped;  // ids must be unique within a corpus
            return;
        }
        a.source_tag = "ria";
        res.articles.push_back(std::move(a));
        ++res.stats.loaded;
    });
    return res;
}

LoadResult load_lenta(const std::string& path) {
    LoadResult res;
    std::unordered_set<std::string> seen_ids;
    bool have_header = false;
    std::size_t url_col = 0, title_col = 0, text_col = 0, need = 0;
    std::size_t row_index = 0;

    io::for_each_csv_row(path, [&](std::vector<std::string>&& row) {
        if (!have_header) {
            auto col = [&](const std::string& name) -> std::size_t {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    if (row[i] == name) return i;
                }
                throw std::runtime_error("lenta: missing required column '" + name +
                                         "' in " + path);
            };
            url_col = col("url");
            title_col = col("title");
            text_col = col("text");
            need = std::max({url_col, title_col, text_col}) + 1;
            have_header = true;
            return;
        }
        const std::size_t index = row_index++;
        if (row.size() < need) {
            ++res.stats.skipped;
            return;
        }
        Article a;
        a.title = normalize(row[title_col]);
        a.text = normalize(row[text_col]);
        if (a.title.empty() || a.text.empty()) {
            ++res.stats.skipped;
            return;
        }
        const std::string& url = row[url_col];
        if (!url.empty() && !seen_ids.count(url)) a.id = url;
        else a.id = std::to_string(index);
        seen_ids.insert(a.id);
        a.source_tag = "lenta";
        res.articles.push_back(std::move(a));
        ++res.stats.loaded;
    });
    if (!have_header) throw std::runtime_error("lenta: empty file: " + path);
    return res;
}

LoadResult load_articles_jsonl(const std::string& path) {
    LoadResult res;
    std::unordered_set<std::string> seen_ids;
    std::size_t index = 0;
    io::for_each_line(path, [&](const std::string& line) {
        const std::size_t line_index = index++;
        if (line.empty()) {
            ++res.stats.skipped;
            return;
        }
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("title") || !j.contains("text") ||
            !j["title"].is_string() || !j["text"].is_string()) {
            ++res.stats.skipped;
            return;
        }
        Article a;
        a.title = normalize(j["title"].get<std::string>());
        a.text = normalize(j["text"].get<std::string>());
        if (a.title.empty() || a.text.empty()) {
            ++res.stats.skipped;
            return;
        }
        if (j.contains("id") && j["id"].is_string()) a.id = j["id"].get<std::string>();
        else a.id = std::to_string(line_index);
        if (a.id.empty() || !seen_ids.insert(a.id).second) {
            ++res.stats.skipped;
            return;
        }
        if (j.contains("source_tag") && j["source_tag"].is_string())
            a.source_tag = j["source_tag"].get<std::string>();
        res.articles.push_back(std::move(a));
        ++res.stats.loaded;
    });
    return res;
}

void write_articles_jsonl(const std::string& path, const std::vector<Article>& articles) {
    std::vector<std::string> lines;
    lines.reserve(articles.size());
    for (const auto& a : articles) {
        nlohmann::json j;
        j["id"] = a.id;
        j["title"] = a.title;
        j["text"] = a.text;
        if (!a.source_tag.empty()) j["source_tag"] = a.source_tag;
        lines.push_back(j.dump());
    }
    io::write_lines(path, lines);
}

namespace {

// Fisher-Yates with an explicit rejection-sampled bound so the result
// does not depend on the standard library's distribution internals.
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

private:
    std::mt19937_64 gen_;
};

}  // namespace

SplitManifest split_dataset(const std::vector<Article>& articles,
                            const std::array<int, 3>& ratios,
                            std::uint64_t seed) {
    if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 ||
        ratios[0] + ratios[1] + ratios[2] != 100) {
        throw std::runtime_error("split: ratios must be positive and sum to 100");
    }
    const std::size_t n = articles.size();
    if (n < 3) throw std::runtime_error("split: fewer articles than partitions");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    DetRng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.bounded(i + 1));
        std::swap(order[i], order[j]);
    }

    // Largest-remainder apportionment; ties go to the earlier partition.
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const std::size_t exact_num = n * static_cast<std::size_t>(ratios[k]);
        counts[k] = exact_num / 100;
        frac[k] = static_cast<double>(exact_num % 100);
        assigned += counts[k];
    }
    while (assigned < n) {
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            if (frac[k] > frac[best]) best = k;
        }
        ++counts[best];
        frac[best] = -1.0;
        ++assigned;
    }

    SplitManifest m;
    m.seed = seed;
    m.counts = counts;
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
        for (std::size_t c = 0; c < counts[k]; ++c, ++pos) {
            m.assignment[articles[order[pos]].id] = static_cast<Part>(k);
        }
    }
    return m;
}

SplitManifest load_manifest(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(io::read_file(path));
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    auto counts = j.at("counts");
    for (int k = 0; k < 3; ++k) m.counts[static_cast<std::size_t>(k)] = counts.at(k).get<std::size_t>();
    for (const auto& [id, label] : j.at("assignment").items()) {
        auto p = part_from_name(label.get<std::string>());
        if (!p) throw std::runtime_error("manifest: unknown partition label for id " + id);
        m.assignment[id] = *p;
    }
    return m;
}

void write_manifest(const std::string& path, const SplitManifest& m) {
    nlohmann::json j;
    j["seed"] = m.seed;
    j["counts"] = {m.counts[0], m.counts[1], m.counts[2]};
    nlohmann::json assign = nlohmann::json::object();
    for (const auto& [id, part] : m.assignment) assign[id] = part_name(part);
    j["assignment"] = assign;
    io::write_file(path, j.dump() + "\n");
}

std::vector<Article> select_part(const std::vector<Article>& articles,
                                 const SplitManifest& m, Part part) {
    std::vector<Article> out;
    for (const auto& a : articles) {
        auto it = m.assignment.find(a.id);
        if (it != m.assignment.end() && it->second == part) out.push_back(a);
    }
    return out;
}

const std::set<std::string>& default_abbreviations() {
    static const std::set<std::string> abbrevs = {
        "г",   "гг",   "им",   "т.е", "т.д", "т.п", "т.к", "т.н", "руб", "коп",
        "тыс", "млн",  "млрд", "др",  "пр",  "см",  "стр", "рис", "ул",  "пер",
        "кв",  "обл",  "просп","акад","проф","доц", "ок",  "экз", "шт",  "чел",
    };
    return abbrevs;
}

std::set<std::string> load_abbreviations(const std::string& path) {
    std::set<std::string> out;
    for (const std::string& line : io::read_lines(path)) {
        std::string a = normalize(line);
        if (!a.empty() && a[0] != '#') out.insert(a);
    }
    return out;
}

namespace {

bool is_terminator(char32_t c) {
    return c == U'.' || c == U'!' || c == U'?' || c == U'…';
}

}  // namespace

std::vector<SentenceSpan> split_sentences(const std::string& normalized_text,
                                          const std::set<std::string>& abbreviations) {
    std::vector<SentenceSpan> spans;
    if (normalized_text.empty()) return spans;

    const std::u32string cps = decode_utf8(normalized_text);
    const std::size_t n = cps.size();

    // byte offset of each codepoint, plus the end sentinel
    std::vector<std::size_t> byte_of(n + 1);
    {
        std::size_t b = 0;
        for (std::size_t i = 0; i < n; ++i) {
            byte_of[i] = b;
            char32_t c = cps[i];
            b += c < 0x80 ? 1 : c < 0x800 ? 2 : c < 0x10000 ? 3 : 4;
        }
        byte_of[n] = b;
    }

    auto preceding_word = [&](std::size_t term_start) -> std::u32string {
        std::size_t w = term_start;
        while (w > 0 && !uni::is_space(cps[w - 1])) --w;
        return cps.substr(w, term_start - w);
    };

    std::size_t sent_start = 0;
    std::size_t i = 0;
    while (i < n) {
        if (!is_terminator(cps[i])) {
            ++i;
            continue;
        }
        std::size_t run_start = i;
        while (i < n && is_terminator(cps[i])) ++i;
        // boundary requires whitespace then a letter
        std::size_t j = i;
        while (j < n && uni::is_space(cps[j])) ++j;
        if (j == i || j == n || !uni::is_letter(cps[j])) continue;

        std::u32string word = preceding_word(run_start);
        if (!word.empty()) {
            std::string w8 = encode_utf8(word);
            if (abbreviations.count(w8)) continue;
            if (word.size() == 1 && uni::is_letter(word[0])) continue;
        }
        spans.push_back({byte_of[sent_start], byte_of[i]});
        sent_start = j;
        i = j;
    }
    if (sent_start < n) spans.push_back({byte_of[sent_start], byte_of[n]});
    return spans;
}

}  // namespace headliner::corpus
