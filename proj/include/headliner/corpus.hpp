#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace headliner::corpus {

struct Article {
    std::string id;
    std::string title;   // reference headline, normalized
    std::string text;    // body, normalized
    std::string source_tag;  // "ria", "lenta", or empty
};

// Byte offsets into the normalized UTF-8 text, always on codepoint
// boundaries. Spans are ordered, non-overlapping, and separated only by
// whitespace.
struct SentenceSpan {
    std::size_t start = 0;
    std::size_t end = 0;
};

enum class Part { Train, Val, Test };

std::string part_name(Part p);
std::optional<Part> part_from_name(const std::string& name);

struct SplitManifest {
    std::uint64_t seed = 0;
    std::array<std::size_t, 3> counts{0, 0, 0};  // train, val, test
    std::map<std::string, Part> assignment;
};

struct LoadStats {
    std::size_t loaded = 0;
    std::size_t skipped = 0;
};

struct LoadResult {
    std::vector<Article> articles;
    LoadStats stats;
};

// Canonical composition, lowercasing, whitespace collapse, trim.
// Idempotent: normalize(normalize(x)) == normalize(x).
std::string normalize(const std::string& text);

// Strips tag-like markup (<p>, </div>, <!-- -->) and decodes HTML
// entities; used by the RIA loader before normalization.
std::string strip_html(const std::string& text);

// Line-delimited JSON records with "title" and "text" fields, optional
// "id". Malformed or incomplete lines are skipped and counted.
// Throws std::runtime_error if the file cannot be read.
LoadResult load_ria(const std::string& path);

// RFC-4180 CSV with a header row naming at least url, title, text.
// Rows with empty title or text after normalization are skipped.
LoadResult load_lenta(const std::string& path);

// Generic loader for the normalized articles JSONL interchange format.
LoadResult load_articles_jsonl(const std::string& path);

void write_articles_jsonl(const std::string& path, const std::vector<Article>& articles);

// Seeded shuffle followed by contiguous assignment. Deterministic for a
// fixed seed regardless of platform. Ratios must be positive and sum to
// 100. Throws if there are fewer articles than partitions.
SplitManifest split_dataset(const std::vector<Article>& articles,
                            const std::array<int, 3>& ratios,
                            std::uint64_t seed);

SplitManifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const SplitManifest& m);

// Articles of the given partition in the original input order (the order
// predictions are aligned against).
std::vector<Article> select_part(const std::vector<Article>& articles,
                                 const SplitManifest& m, Part part);

// Default Russian abbreviation list (also shipped as data/ru_abbrev.txt).
const std::set<std::string>& default_abbreviations();

std::set<std::string> load_abbreviations(const std::string& path);

// Boundaries after '.', '!', '?', '…' followed by whitespace and a
// letter, unless the preceding word is an abbreviation or a single
// initial. Text without a terminator yields one span.
std::vector<SentenceSpan> split_sentences(const std::string& normalized_text,
                                          const std::set<std::string>& abbreviations =
                                              default_abbreviations());

}  // namespace headliner::corpus
