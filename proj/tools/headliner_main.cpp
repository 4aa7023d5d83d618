// headliner: benchmarking workbench for news headline generation.
// Subcommands cover corpus ingestion, deterministic splits, BPE training,
// the first-sentence baseline, ROUGE/BLEU/novelty evaluation, document
// noising, the desk-scale pointer-generator, and pairwise human-eval
// aggregation. Every run writes a JSON manifest with the command, its
// configuration, seeds, and input digests.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "headliner/baseline.hpp"
#include "headliner/bpe.hpp"
#include "headliner/corpus.hpp"
#include "headliner/humaneval.hpp"
#include "headliner/io.hpp"
#include "headliner/mechanisms.hpp"
#include "headliner/metrics.hpp"
#include "headliner/pgn.hpp"
#include "headliner/tokenize.hpp"

namespace {

using namespace headliner;

using KvList = std::vector<std::pair<std::string, std::string>>;

std::vector<std::string> g_argv;

void emit_manifest(const std::string& explicit_path, const std::string& primary_output,
                   const std::string& command, const KvList& config,
                   const std::vector<std::string>& inputs, std::uint64_t seed) {
    std::string path = explicit_path;
    if (path.empty()) {
        path = primary_output.empty() ? command + ".manifest.json"
                                      : primary_output + ".manifest.json";
    }
    io::write_run_manifest(path, command, g_argv, config, inputs, seed);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<corpus::Article> load_part(const std::string& articles_path,
                                       const std::string& manifest_path,
                                       const std::string& part_name) {
    auto res = corpus::load_articles_jsonl(articles_path);
    if (manifest_path.empty()) return std::move(res.articles);
    auto manifest = corpus::load_manifest(manifest_path);
    auto part = corpus::part_from_name(part_name);
    if (!part) throw std::runtime_error("unknown partition: " + part_name);
    return corpus::select_part(res.articles, manifest, *part);
}

std::array<int, 3> parse_ratios(const std::string& text) {
    std::array<int, 3> out{};
    if (std::sscanf(text.c_str(), "%d:%d:%d", &out[0], &out[1], &out[2]) != 3) {
        throw CLI::ValidationError("--ratios", "expected the form A:B:C, e.g. 90:5:5");
    }
    return out;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string format, input, output, manifest;
};

int run_ingest(const IngestArgs& a) {
    corpus::LoadResult res;
    if (a.format == "ria") res = corpus::load_ria(a.input);
    else if (a.format == "lenta") res = corpus::load_lenta(a.input);
    else res = corpus::load_articles_jsonl(a.input);
    corpus::write_articles_jsonl(a.output, res.articles);
    std::cout << "loaded " << res.stats.loaded << " articles, skipped " << res.stats.skipped
              << "\n";
    emit_manifest(a.manifest, a.output, "ingest",
                  {{"format", a.format}, {"input", a.input}, {"output", a.output}},
                  {a.input}, 0);
    return 0;
}

struct SplitArgs {
    std::string input, output, ratios = "90:5:5", manifest;
    std::uint64_t seed = 42;
};

int run_split(const SplitArgs& a) {
    auto articles = corpus::load_articles_jsonl(a.input).articles;
    auto m = corpus::split_dataset(articles, parse_ratios(a.ratios), a.seed);
    corpus::write_manifest(a.output, m);
    std::cout << "split " << articles.size() << " articles into " << m.counts[0] << "/"
              << m.counts[1] << "/" << m.counts[2] << " (train/val/test)\n";
    emit_manifest(a.manifest, a.output, "split",
                  {{"input", a.input}, {"ratios", a.ratios}}, {a.input}, a.seed);
    return 0;
}

struct TrainBpeArgs {
    std::string input, output, field = "both", manifest;
    int merges = 30000;
};

int run_train_bpe(const TrainBpeArgs& a) {
    auto articles = corpus::load_articles_jsonl(a.input).articles;
    std::vector<tok::TokenSeq> corpus_seqs;
    for (const auto& art : articles) {
        if (a.field != "text") corpus_seqs.push_back(tok::word_tokenize(art.title));
        if (a.field != "title") corpus_seqs.push_back(tok::word_tokenize(art.text));
    }
    auto model = tok::bpe_train(corpus_seqs, a.merges);
    tok::save_bpe(model, a.output);
    std::cout << "trained " << model.merges.size() << " merges over alphabet of "
              << model.alphabet.size() << " symbols; vocab " << model.vocab.size() << "\n";
    emit_manifest(a.manifest, a.output, "train-bpe",
                  {{"input", a.input},
                   {"merges", std::to_string(a.merges)},
                   {"field", a.field}},
                  {a.input}, 0);
    return 0;
}

struct BaselineArgs {
    std::string input, split, part = "test", generator = "first-sentence", output;
    std::string abbrev, manifest;
    int max_tokens = 0;
};

int run_baseline_cmd(const BaselineArgs& a) {
    auto articles = load_part(a.input, a.split, a.part);
    baseline::FirstSentenceOptions opts;
    opts.max_tokens = a.max_tokens;
    std::set<std::string> abbrevs;
    if (!a.abbrev.empty()) {
        abbrevs = corpus::load_abbreviations(a.abbrev);
        opts.abbreviations = &abbrevs;
    }
    auto preds = baseline::run_baseline(articles, a.generator, opts);
    io::write_lines(a.output, preds);
    std::cout << "wrote " << preds.size() << " headlines\n";
    emit_manifest(a.manifest, a.output, "baseline",
                  {{"input", a.input},
                   {"split", a.split},
                   {"part", a.split.empty() ? "" : a.part},
                   {"generator", a.generator},
                   {"max_tokens", std::to_string(a.max_tokens)}},
                  {a.input}, 0);
    return 0;
}

struct EvaluateArgs {
    std::string refs, split, part = "test", hyps, output, name = "system", manifest;
    bool no_novelty = false;
    bool bleu_smoothing = false;
    int jobs = 1;
    int bootstrap = 0;
    std::uint64_t seed = 13;
};

int run_evaluate(const EvaluateArgs& a) {
    std::vector<tok::TokenSeq> refs, sources;
    if (ends_with(a.refs, ".jsonl")) {
        auto articles = load_part(a.refs, a.split, a.part);
        for (const auto& art : articles) {
            refs.push_back(tok::word_tokenize(art.title));
            sources.push_back(tok::word_tokenize(art.text));
        }
    } else {
        for (const auto& line : io::read_lines(a.refs)) {
            refs.push_back(tok::word_tokenize(corpus::normalize(line)));
        }
    }
    std::vector<tok::TokenSeq> hyps;
    for (const auto& line : io::read_lines(a.hyps)) {
        hyps.push_back(tok::word_tokenize(corpus::normalize(line)));
    }
    metrics::EvaluateOptions opts;
    opts.novelty_profile = !a.no_novelty;
    opts.bleu_smoothing = a.bleu_smoothing;
    opts.jobs = a.jobs;
    opts.bootstrap = a.bootstrap;
    opts.bootstrap_seed = a.seed;
    auto res = metrics::evaluate_corpus(
        refs, hyps, a.no_novelty ? std::vector<tok::TokenSeq>{} : sources, opts);
    std::cout << metrics::render_table({{a.name, res.report}});
    if (!a.output.empty()) {
        io::write_file(a.output, metrics::report_to_json(res.report, res.intervals));
    }
    emit_manifest(a.manifest, a.output, "evaluate",
                  {{"refs", a.refs},
                   {"hyps", a.hyps},
                   {"jobs", std::to_string(a.jobs)},
                   {"bootstrap", std::to_string(a.bootstrap)}},
                  {a.refs, a.hyps}, a.seed);
    return 0;
}

struct NoveltyArgs {
    std::string articles, split, part = "test", hyps, output, manifest;
};

int run_novelty(const NoveltyArgs& a) {
    auto articles = load_part(a.articles, a.split, a.part);
    std::vector<tok::TokenSeq> sources, references, hyps;
    for (const auto& art : articles) {
        sources.push_back(tok::word_tokenize(art.text));
        references.push_back(tok::word_tokenize(art.title));
    }
    if (!a.hyps.empty()) {
        for (const auto& line : io::read_lines(a.hyps)) {
            hyps.push_back(tok::word_tokenize(corpus::normalize(line)));
        }
        if (hyps.size() != sources.size()) {
            throw std::runtime_error("novelty: " + std::to_string(hyps.size()) +
                                     " hypotheses vs " + std::to_string(sources.size()) +
                                     " articles");
        }
    }

    auto profile = [&](const std::vector<tok::TokenSeq>& heads) {
        std::map<int, double> prof;
        for (int n = 1; n <= 4; ++n) {
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t i = 0; i < heads.size(); ++i) {
                if (auto v = metrics::novelty(sources[i], heads[i], n)) {
                    sum += *v;
                    ++cnt;
                }
            }
            if (cnt > 0) prof[n] = sum / static_cast<double>(cnt);
        }
        return prof;
    };

    std::string json = "{";
    auto emit = [&](const std::string& key, const std::map<int, double>& prof) {
        json += "\"" + key + "\":{";
        bool first = true;
        for (const auto& [n, v] : prof) {
            if (!first) json += ",";
            json += "\"" + std::to_string(n) + "\":" + std::to_string(v);
            first = false;
        }
        json += "}";
    };
    auto ref_prof = profile(references);
    emit("reference", ref_prof);
    std::cout << "novel n-gram proportion (reference titles):";
    for (const auto& [n, v] : ref_prof) std::cout << "  " << n << "-gram " << v;
    std::cout << "\n";
    if (!hyps.empty()) {
        json += ",";
        auto hyp_prof = profile(hyps);
        emit("model", hyp_prof);
        std::cout << "novel n-gram proportion (hypotheses):      ";
        for (const auto& [n, v] : hyp_prof) std::cout << "  " << n << "-gram " << v;
        std::cout << "\n";
    }
    json += "}\n";
    if (!a.output.empty()) io::write_file(a.output, json);
    emit_manifest(a.manifest, a.output, "novelty",
                  {{"articles", a.articles}, {"hyps", a.hyps}},
                  a.hyps.empty() ? std::vector<std::string>{a.articles}
                                 : std::vector<std::string>{a.articles, a.hyps},
                  0);
    return 0;
}

struct CorruptArgs {
    std::string input, output, kind = "shuffle_sentences", mask_token = "<mask>", manifest;
    double span_mean = 3.0;
    double mask_fraction = 0.3;
    std::uint64_t seed = 17;
};

int run_corrupt(const CorruptArgs& a) {
    auto articles = corpus::load_articles_jsonl(a.input).articles;
    mech::NoiseSpec spec;
    if (a.kind == "shuffle_sentences" || a.kind == "shuffle") {
        spec.kind = mech::NoiseKind::ShuffleSentences;
    } else if (a.kind == "rotate") {
        spec.kind = mech::NoiseKind::Rotate;
    } else if (a.kind == "infill") {
        spec.kind = mech::NoiseKind::Infill;
    } else {
        throw CLI::ValidationError("--kind", "expected shuffle_sentences, rotate or infill");
    }
    spec.mask_token = a.mask_token;
    spec.span_length_mean = a.span_mean;
    spec.mask_fraction = a.mask_fraction;

    std::vector<corpus::Article> out;
    out.reserve(articles.size());
    for (std::size_t i = 0; i < articles.size(); ++i) {
        const auto& art = articles[i];
        std::vector<tok::TokenSeq> sentences;
        for (const auto& span : corpus::split_sentences(art.text)) {
            sentences.push_back(
                tok::word_tokenize(art.text.substr(span.start, span.end - span.start)));
        }
        spec.seed = a.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
        auto corrupted = mech::corrupt(sentences, spec);
        corpus::Article c = art;
        c.text = tok::join_tokens(corrupted.tokens);
        out.push_back(std::move(c));
    }
    corpus::write_articles_jsonl(a.output, out);
    std::cout << "corrupted " << out.size() << " articles (" << a.kind << ")\n";
    emit_manifest(a.manifest, a.output, "corrupt",
                  {{"input", a.input},
                   {"kind", a.kind},
                   {"span_mean", std::to_string(a.span_mean)},
                   {"mask_fraction", std::to_string(a.mask_fraction)}},
                  {a.input}, a.seed);
    return 0;
}

struct TrainPgnArgs {
    std::string input, split, part = "train", checkpoint, curve, manifest;
    std::string tokenizer = "word", bpe_model, cell = "lstm";
    bool synthetic_copy = false;
    int examples = 5000, val_examples = 500, src_len = 8, copy_k = 3;
    int vocab_size = 50, embed_dim = 32, hidden_dim = 64;
    int max_src = 64, max_tgt = 16;
    int steps = 2000, batch = 8, accum = 1, val_interval = 100, coverage_delay = 0;
    double lr = 2e-2, clip_norm = 2.0, lambda = 1.0;
    std::uint64_t seed = 7;
};

tok::Vocab word_vocab_from(const std::vector<corpus::Article>& articles, int vocab_size) {
    std::unordered_map<std::string, long long> counts;
    for (const auto& art : articles) {
        for (const auto& t : tok::word_tokenize(art.title).tokens) ++counts[t];
        for (const auto& t : tok::word_tokenize(art.text).tokens) ++counts[t];
    }
    std::vector<std::pair<std::string, long long>> by_freq(counts.begin(), counts.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    std::vector<std::string> kept;
    for (const auto& [w, c] : by_freq) {
        if (static_cast<int>(kept.size()) + 4 >= vocab_size) break;
        kept.push_back(w);
    }
    return tok::Vocab::from_tokens(kept);
}

int run_train_pgn(const TrainPgnArgs& a) {
    pgn::PgnConfig cfg;
    cfg.vocab_size = a.vocab_size;
    cfg.embed_dim = a.embed_dim;
    cfg.hidden_dim = a.hidden_dim;
    cfg.max_src_len = a.max_src;
    cfg.max_tgt_len = a.max_tgt;
    cfg.coverage_weight = a.lambda;
    cfg.cell = a.cell == "gru" ? pgn::CellKind::Gru : pgn::CellKind::Lstm;
    cfg.seed = a.seed;

    pgn::TrainOptions opts;
    opts.steps = a.steps;
    opts.batch_size = a.batch;
    opts.grad_accum = a.accum;
    opts.lr = a.lr;
    opts.clip_norm = a.clip_norm;
    opts.coverage_delay = a.coverage_delay;
    opts.val_interval = a.val_interval;

    tok::Vocab vocab;
    tok::Scheme scheme = tok::Scheme::Word;
    std::vector<pgn::Example> train_set, val_set;

    if (a.synthetic_copy) {
        auto task = pgn::make_copy_task(cfg, static_cast<std::size_t>(a.examples),
                                        static_cast<std::size_t>(a.val_examples), a.src_len,
                                        a.copy_k, a.seed * 13 + 1);
        vocab = std::move(task.vocab);
        train_set = std::move(task.train_set);
        val_set = std::move(task.val_set);
    } else {
        if (a.input.empty()) {
            throw CLI::ValidationError("--input", "required unless --synthetic-copy is set");
        }
        auto articles = load_part(a.input, a.split, a.part);
        if (articles.empty()) throw std::runtime_error("train-pgn: no training articles");

        tok::BpeModel bpe;
        const bool use_bpe = a.tokenizer == "bpe";
        if (use_bpe) {
            if (a.bpe_model.empty()) {
                throw CLI::ValidationError("--bpe-model", "required with --tokenizer bpe");
            }
            bpe = tok::load_bpe(a.bpe_model);
            vocab = bpe.vocab;
            cfg.vocab_size = vocab.size();
            scheme = tok::Scheme::Bpe;
        } else {
            vocab = word_vocab_from(articles, cfg.vocab_size);
            cfg.vocab_size = vocab.size();  // small corpora have fewer types
        }
        auto to_tokens = [&](const std::string& text) {
            auto words = tok::word_tokenize(text).tokens;
            if (!use_bpe) return words;
            return tok::bpe_encode(bpe, words).tokens;
        };
        std::vector<pgn::Example> all;
        for (const auto& art : articles) {
            auto src = to_tokens(art.text);
            auto tgt = to_tokens(art.title);
            if (src.empty() || tgt.empty()) continue;
            all.push_back(pgn::make_example(vocab, cfg, src, tgt, !use_bpe));
        }
        if (all.size() < 2) throw std::runtime_error("train-pgn: not enough usable articles");
        const std::size_t n_val = std::max<std::size_t>(1, all.size() / 20);
        val_set.assign(all.end() - static_cast<std::ptrdiff_t>(n_val), all.end());
        train_set.assign(all.begin(), all.end() - static_cast<std::ptrdiff_t>(n_val));
    }

    auto res = pgn::train(cfg, train_set, val_set, opts);
    pgn::save_checkpoint(a.checkpoint, res.params, vocab, scheme);
    if (!a.curve.empty()) io::write_file(a.curve, pgn::curve_to_csv(res.curve));
    const double acc = pgn::token_accuracy(res.params, val_set);
    std::cout << "trained " << res.final_step << " steps"
              << (res.diverged ? " (diverged, last good checkpoint restored)" : "")
              << "; teacher-forced token accuracy " << acc << "\n";
    if (!res.curve.empty()) {
        std::cout << "final val loss " << res.curve.back().val_loss << "\n";
    }
    emit_manifest(a.manifest, a.checkpoint, "train-pgn",
                  {{"synthetic_copy", a.synthetic_copy ? "true" : "false"},
                   {"input", a.input},
                   {"tokenizer", a.tokenizer},
                   {"steps", std::to_string(a.steps)},
                   {"batch", std::to_string(a.batch)},
                   {"grad_accum", std::to_string(a.accum)},
                   {"lr", std::to_string(a.lr)},
                   {"lambda", std::to_string(a.lambda)},
                   {"cell", a.cell},
                   {"hidden_dim", std::to_string(a.hidden_dim)}},
                  a.input.empty() ? std::vector<std::string>{}
                                  : std::vector<std::string>{a.input},
                  a.seed);
    return 0;
}

struct DecodeArgs {
    std::string checkpoint, input, split, part = "test", output, bpe_model, manifest;
    int beam = 4, max_len = 0;
    double alpha = 1.0;
};

int run_decode(const DecodeArgs& a) {
    auto ck = pgn::load_checkpoint(a.checkpoint);
    auto articles = load_part(a.input, a.split, a.part);

    tok::BpeModel bpe;
    const bool use_bpe = ck.scheme == tok::Scheme::Bpe;
    if (use_bpe) {
        if (a.bpe_model.empty()) {
            throw CLI::ValidationError("--bpe-model",
                                       "checkpoint was trained on BPE tokens; pass the model");
        }
        bpe = tok::load_bpe(a.bpe_model);
    }

    pgn::DecodeOptions opts;
    opts.beam = a.beam;
    opts.max_len = a.max_len;
    opts.alpha = a.alpha;

    std::vector<std::string> lines;
    lines.reserve(articles.size());
    for (const auto& art : articles) {
        auto words = tok::word_tokenize(art.text).tokens;
        std::vector<std::string> src = use_bpe ? tok::bpe_encode(bpe, words).tokens : words;
        auto out_tokens = pgn::decode_headline(ck.params, ck.vocab, src, !use_bpe, opts);
        if (use_bpe) {
            tok::TokenSeq seq;
            seq.tokens = out_tokens;
            seq.scheme = tok::Scheme::Bpe;
            lines.push_back(tok::join_tokens(tok::bpe_decode(bpe, seq)));
        } else {
            lines.push_back(tok::join_tokens(out_tokens));
        }
    }
    io::write_lines(a.output, lines);
    std::cout << "decoded " << lines.size() << " headlines (beam " << a.beam << ")\n";
    emit_manifest(a.manifest, a.output, "decode",
                  {{"checkpoint", a.checkpoint},
                   {"input", a.input},
                   {"beam", std::to_string(a.beam)},
                   {"alpha", std::to_string(a.alpha)}},
                  {a.checkpoint, a.input}, 0);
    return 0;
}

struct GradCheckArgs {
    std::string cell = "lstm", manifest;
    double lambda = 1.0, eps = 1e-4, threshold = 1e-4;
    std::size_t coords = 0;
    std::uint64_t seed = 21;
};

int run_grad_check(const GradCheckArgs& a) {
    pgn::PgnConfig cfg;
    cfg.vocab_size = 20;
    cfg.embed_dim = 6;
    cfg.hidden_dim = 8;
    cfg.max_src_len = 16;
    cfg.max_tgt_len = 8;
    cfg.cell = a.cell == "gru" ? pgn::CellKind::Gru : pgn::CellKind::Lstm;
    cfg.seed = a.seed;
    std::vector<std::string> regular;
    for (int i = 4; i < cfg.vocab_size; ++i) regular.push_back("w" + std::to_string(i));
    auto vocab = tok::Vocab::from_tokens(regular);
    auto ex = pgn::make_example(vocab, cfg, {"w4", "nov", "w6", "w4", "w9"},
                                {"w6", "nov", "w4"}, true);
    auto params = pgn::init_params(cfg);
    auto res = pgn::grad_check(params, ex, a.lambda, a.eps, a.coords);
    std::printf("max relative error %.3e over %zu coordinates (%zu skipped at coverage-min "
                "kinks); worst tensor: %s\n",
                res.max_rel_err, res.checked, res.skipped,
                res.worst_param.empty() ? "-" : res.worst_param.c_str());
    emit_manifest(a.manifest, "", "grad-check",
                  {{"lambda", std::to_string(a.lambda)},
                   {"eps", std::to_string(a.eps)},
                   {"cell", a.cell}},
                  {}, a.seed);
    if (res.max_rel_err >= a.threshold) {
        std::cerr << "gradient check FAILED threshold " << a.threshold << "\n";
        return 2;
    }
    return 0;
}

struct HumevalExportArgs {
    std::string articles, split, part = "test", hyps, tasks, key, manifest;
    std::uint64_t seed = 29;
};

int run_humeval_export(const HumevalExportArgs& a) {
    auto arts = load_part(a.articles, a.split, a.part);
    auto hyps = io::read_lines(a.hyps);
    auto exp = humaneval::export_tasks(arts, hyps, a.seed);
    io::write_lines(a.tasks, exp.task_lines);
    io::write_lines(a.key, exp.key_lines);
    std::cout << "exported " << arts.size() << " blinded comparison tasks\n";
    emit_manifest(a.manifest, a.tasks, "humeval-export",
                  {{"articles", a.articles}, {"hyps", a.hyps}, {"key", a.key}},
                  {a.articles, a.hyps}, a.seed);
    return 0;
}

struct HumevalAggArgs {
    std::string votes, output, manifest, rule = "plurality";
    int quorum = 9, supermajority = 5, majority_threshold = 5;
};

int run_humeval_aggregate(const HumevalAggArgs& a) {
    auto votes = humaneval::parse_votes_tsv(io::read_lines(a.votes));
    humaneval::AggregateOptions opts;
    opts.quorum = a.quorum;
    opts.supermajority = a.supermajority;
    opts.rule = a.rule == "majority" ? humaneval::OutcomeRule::Majority
                                     : humaneval::OutcomeRule::Plurality;
    opts.majority_threshold = a.majority_threshold;
    auto s = humaneval::aggregate(votes, opts);
    std::printf("items %zu: model wins %.1f%%, draws %.1f%%, human wins %.1f%% | "
                "supermajority model %.1f%% human %.1f%% | excluded %zu\n",
                s.n_items, 100.0 * s.model_win_rate, 100.0 * s.draw_rate,
                100.0 * s.human_win_rate, 100.0 * s.model_supermajority_rate,
                100.0 * s.human_supermajority_rate, s.excluded_items.size());
    if (!a.output.empty()) io::write_file(a.output, humaneval::summary_to_json(s));
    emit_manifest(a.manifest, a.output, "humeval-aggregate",
                  {{"votes", a.votes},
                   {"quorum", std::to_string(a.quorum)},
                   {"supermajority", std::to_string(a.supermajority)}},
                  {a.votes}, 0);
    return 0;
}

struct ReportArgs {
    std::vector<std::string> inputs, names;
    std::string manifest;
};

int run_report(const ReportArgs& a) {
    std::vector<std::pair<std::string, metrics::MetricReport>> rows;
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        auto rep = metrics::report_from_json(io::read_file(a.inputs[i]));
        std::string name = i < a.names.size() ? a.names[i] : a.inputs[i];
        rows.emplace_back(name, rep);
    }
    std::cout << metrics::render_table(rows);
    emit_manifest(a.manifest, "", "report", {}, a.inputs, 0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 0; i < argc; ++i) g_argv.emplace_back(argv[i]);

    CLI::App app{"headliner: news headline generation benchmarking workbench"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file (dotted subcommand keys)");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "normalize a raw corpus into articles JSONL");
    c_ingest->add_option("--format", ingest.format, "ria | lenta | jsonl")
        ->required()
        ->check(CLI::IsMember({"ria", "lenta", "jsonl"}));
    c_ingest->add_option("--input", ingest.input)->required();
    c_ingest->add_option("--output", ingest.output)->required();
    c_ingest->add_option("--manifest", ingest.manifest, "run-manifest path");

    SplitArgs split;
    auto* c_split = app.add_subcommand("split", "deterministic train/val/test partition");
    c_split->add_option("--input", split.input)->required();
    c_split->add_option("--output", split.output)->required();
    c_split->add_option("--ratios", split.ratios, "A:B:C summing to 100 (default 90:5:5)");
    c_split->add_option("--seed", split.seed);
    c_split->add_option("--manifest", split.manifest);

    TrainBpeArgs tbpe;
    auto* c_tbpe = app.add_subcommand("train-bpe", "learn byte-pair-encoding merges");
    c_tbpe->add_option("--input", tbpe.input)->required();
    c_tbpe->add_option("--output", tbpe.output, "model file; writes <output>.vocab.json too")
        ->required();
    c_tbpe->add_option("--merges", tbpe.merges);
    c_tbpe->add_option("--field", tbpe.field)->check(CLI::IsMember({"both", "text", "title"}));
    c_tbpe->add_option("--manifest", tbpe.manifest);

    BaselineArgs base;
    auto* c_base = app.add_subcommand("baseline", "run a training-free headline generator");
    c_base->add_option("--input", base.input)->required();
    c_base->add_option("--split", base.split, "split manifest; filters to --part");
    c_base->add_option("--part", base.part)->check(CLI::IsMember({"train", "val", "test"}));
    c_base->add_option("--generator", base.generator)->check(CLI::IsMember({"first-sentence"}));
    c_base->add_option("--output", base.output)->required();
    c_base->add_option("--max-tokens", base.max_tokens, "0 disables truncation");
    c_base->add_option("--abbrev", base.abbrev, "abbreviation list file");
    c_base->add_option("--manifest", base.manifest);

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "ROUGE/BLEU/novelty/repetition report");
    c_ev->add_option("--refs", ev.refs, "articles .jsonl (titles + sources) or plain lines")
        ->required();
    c_ev->add_option("--split", ev.split);
    c_ev->add_option("--part", ev.part)->check(CLI::IsMember({"train", "val", "test"}));
    c_ev->add_option("--hyps", ev.hyps, "one headline per line, aligned with the refs")
        ->required();
    c_ev->add_option("--output", ev.output, "report JSON path");
    c_ev->add_option("--name", ev.name, "row label in the rendered table");
    c_ev->add_flag("--no-novelty", ev.no_novelty);
    c_ev->add_flag("--bleu-smoothing", ev.bleu_smoothing,
                   "add-one smoothing for zero-match higher orders");
    c_ev->add_option("--jobs", ev.jobs, "data-parallel scoring threads");
    c_ev->add_option("--bootstrap", ev.bootstrap, "resamples for confidence intervals");
    c_ev->add_option("--seed", ev.seed, "bootstrap seed");
    c_ev->add_option("--manifest", ev.manifest);

    NoveltyArgs nov;
    auto* c_nov = app.add_subcommand("novelty", "novel n-gram profiles (reference vs model)");
    c_nov->add_option("--articles", nov.articles)->required();
    c_nov->add_option("--split", nov.split);
    c_nov->add_option("--part", nov.part)->check(CLI::IsMember({"train", "val", "test"}));
    c_nov->add_option("--hyps", nov.hyps, "optional model headlines");
    c_nov->add_option("--output", nov.output);
    c_nov->add_option("--manifest", nov.manifest);

    CorruptArgs cor;
    auto* c_cor = app.add_subcommand("corrupt", "document noising over articles JSONL");
    c_cor->add_option("--input", cor.input)->required();
    c_cor->add_option("--output", cor.output)->required();
    c_cor->add_option("--kind", cor.kind, "shuffle_sentences | rotate | infill");
    c_cor->add_option("--span-mean", cor.span_mean, "infill mean span length");
    c_cor->add_option("--mask-fraction", cor.mask_fraction);
    c_cor->add_option("--mask-token", cor.mask_token);
    c_cor->add_option("--seed", cor.seed);
    c_cor->add_option("--manifest", cor.manifest);

    TrainPgnArgs tp;
    auto* c_tp = app.add_subcommand("train-pgn", "train the pointer-generator");
    c_tp->add_option("--input", tp.input, "articles JSONL (omit with --synthetic-copy)");
    c_tp->add_option("--split", tp.split);
    c_tp->add_option("--part", tp.part)->check(CLI::IsMember({"train", "val", "test"}));
    c_tp->add_flag("--synthetic-copy", tp.synthetic_copy, "copy-first-k toy task");
    c_tp->add_option("--examples", tp.examples, "synthetic train examples");
    c_tp->add_option("--val-examples", tp.val_examples);
    c_tp->add_option("--src-len", tp.src_len, "synthetic source length");
    c_tp->add_option("--copy-k", tp.copy_k, "synthetic copied prefix length");
    c_tp->add_option("--tokenizer", tp.tokenizer)->check(CLI::IsMember({"word", "bpe"}));
    c_tp->add_option("--bpe-model", tp.bpe_model);
    c_tp->add_option("--vocab-size", tp.vocab_size);
    c_tp->add_option("--embed-dim", tp.embed_dim);
    c_tp->add_option("--hidden-dim", tp.hidden_dim);
    c_tp->add_option("--max-src", tp.max_src);
    c_tp->add_option("--max-tgt", tp.max_tgt);
    c_tp->add_option("--steps", tp.steps);
    c_tp->add_option("--batch", tp.batch);
    c_tp->add_option("--accum", tp.accum, "gradient accumulation micro-batches");
    c_tp->add_option("--lr", tp.lr);
    c_tp->add_option("--clip-norm", tp.clip_norm, "0 disables clipping");
    c_tp->add_option("--lambda", tp.lambda, "coverage loss weight");
    c_tp->add_option("--coverage-delay", tp.coverage_delay,
                     "steps before the coverage loss activates");
    c_tp->add_option("--cell", tp.cell)->check(CLI::IsMember({"lstm", "gru"}));
    c_tp->add_option("--val-interval", tp.val_interval);
    c_tp->add_option("--seed", tp.seed);
    c_tp->add_option("--checkpoint", tp.checkpoint)->required();
    c_tp->add_option("--curve", tp.curve, "loss-curve CSV (step,train_loss,val_loss)");
    c_tp->add_option("--manifest", tp.manifest);

    DecodeArgs dec;
    auto* c_dec = app.add_subcommand("decode", "beam-search decode with a checkpoint");
    c_dec->add_option("--checkpoint", dec.checkpoint)->required();
    c_dec->add_option("--input", dec.input)->required();
    c_dec->add_option("--split", dec.split);
    c_dec->add_option("--part", dec.part)->check(CLI::IsMember({"train", "val", "test"}));
    c_dec->add_option("--output", dec.output)->required();
    c_dec->add_option("--beam", dec.beam);
    c_dec->add_option("--max-len", dec.max_len, "0 uses the config max target length");
    c_dec->add_option("--alpha", dec.alpha, "length-normalization exponent");
    c_dec->add_option("--bpe-model", dec.bpe_model);
    c_dec->add_option("--manifest", dec.manifest);

    GradCheckArgs gc;
    auto* c_gc = app.add_subcommand("grad-check", "finite-difference gradient verification");
    c_gc->add_option("--lambda", gc.lambda);
    c_gc->add_option("--eps", gc.eps);
    c_gc->add_option("--coords", gc.coords, "random subsample size; 0 checks everything");
    c_gc->add_option("--cell", gc.cell)->check(CLI::IsMember({"lstm", "gru"}));
    c_gc->add_option("--threshold", gc.threshold, "exit 2 above this max relative error");
    c_gc->add_option("--seed", gc.seed);
    c_gc->add_option("--manifest", gc.manifest);

    HumevalExportArgs he;
    auto* c_he = app.add_subcommand("humeval-export", "blinded pairwise comparison tasks");
    c_he->add_option("--articles", he.articles)->required();
    c_he->add_option("--split", he.split);
    c_he->add_option("--part", he.part)->check(CLI::IsMember({"train", "val", "test"}));
    c_he->add_option("--hyps", he.hyps)->required();
    c_he->add_option("--tasks", he.tasks, "blinded task TSV")->required();
    c_he->add_option("--key", he.key, "private origin key TSV")->required();
    c_he->add_option("--seed", he.seed);
    c_he->add_option("--manifest", he.manifest);

    HumevalAggArgs ha;
    auto* c_ha = app.add_subcommand("humeval-aggregate", "aggregate annotator votes");
    c_ha->add_option("--votes", ha.votes, "TSV item_id, annotator_id, MODEL|HUMAN|DRAW")
        ->required();
    c_ha->add_option("--output", ha.output, "summary JSON");
    c_ha->add_option("--quorum", ha.quorum);
    c_ha->add_option("--supermajority", ha.supermajority);
    c_ha->add_option("--rule", ha.rule)->check(CLI::IsMember({"plurality", "majority"}));
    c_ha->add_option("--majority-threshold", ha.majority_threshold);
    c_ha->add_option("--manifest", ha.manifest);

    ReportArgs rep;
    auto* c_rep = app.add_subcommand("report", "side-by-side table from report JSONs");
    c_rep->add_option("--inputs", rep.inputs)->required()->expected(-1);
    c_rep->add_option("--names", rep.names)->expected(-1);
    c_rep->add_option("--manifest", rep.manifest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1; --help exits 0
    }

    try {
        if (*c_ingest) return run_ingest(ingest);
        if (*c_split) return run_split(split);
        if (*c_tbpe) return run_train_bpe(tbpe);
        if (*c_base) return run_baseline_cmd(base);
        if (*c_ev) return run_evaluate(ev);
        if (*c_nov) return run_novelty(nov);
        if (*c_cor) return run_corrupt(cor);
        if (*c_tp) return run_train_pgn(tp);
        if (*c_dec) return run_decode(dec);
        if (*c_gc) return run_grad_check(gc);
        if (*c_he) return run_humeval_export(he);
        if (*c_ha) return run_humeval_aggregate(ha);
        if (*c_rep) return run_report(rep);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
