#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace headliner::pgn {

// Scorer concept:
//   using State = ...;
//   State initial() const;
//   std::pair<State, Eigen::VectorXd> step(const State&, int prev_token) const;
//       -> state after consuming prev_token, log-probs for the next token
//   int bos() const; int eos() const;
struct BeamResult {
    std::vector<int> tokens;  // without BOS; EOS not included
    double logp = 0.0;        // sum over emitted tokens (EOS included when completed)
    double score = 0.0;       // logp / len^alpha
    bool completed = false;
};

namespace detail {

inline double norm_score(double logp, std::size_t scored_len, double alpha) {
    if (scored_len == 0) return logp;
    return logp / std::pow(static_cast<double>(scored_len), alpha);
}

// true when a is a better result than b (higher score; ties resolve to
// the lexicographically smaller token sequence)
inline bool better(const BeamResult& a, const BeamResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
}

}  // namespace detail

// Returns the highest length-normalized completed hypothesis, or the
// best partial one when nothing reaches EOS within max_len. The greedy
// rollout is part of the candidate pool for beam > 1, so widening the
// beam never returns a worse-scoring hypothesis than greedy.
template <class Scorer>
BeamResult beam_search(const Scorer& scorer, int beam_width, int max_len,
                       double alpha = 1.0) {
    struct Entry {
        typename Scorer::State state;  // after consuming all of `tokens`
        std::vector<int> tokens;
        double logp = 0.0;
    };

    BeamResult best_done;
    bool have_done = false;
    BeamResult best_partial;
    bool have_partial = false;

    auto offer_done = [&](BeamResult r) {
        r.completed = true;
        if (!have_done || detail::better(r, best_done)) {
            best_done = std::move(r);
            have_done = true;
        }
    };
    auto offer_partial = [&](BeamResult r) {
        r.completed = false;
        if (!have_partial || detail::better(r, best_partial)) {
            best_partial = std::move(r);
            have_partial = true;
        }
    };

    std::vector<Entry> beams;
    beams.push_back({scorer.initial(), {}, 0.0});

    for (int depth = 0; depth < max_len && !beams.empty(); ++depth) {
        struct Cand {
            std::size_t from;
            int token;
            double logp;
        };
        std::vector<Cand> cands;
        std::vector<typename Scorer::State> next_states;
        next_states.reserve(beams.size());

        for (std::size_t b = 0; b < beams.size(); ++b) {
            const int prev = beams[b].tokens.empty() ? scorer.bos() : beams[b].tokens.back();
            auto [state, logp_vec] = scorer.step(beams[b].state, prev);
            next_states.push_back(std::move(state));

            const int n = static_cast<int>(logp_vec.size());
            std::vector<int> ids(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
            const int keep = std::min(beam_width, n);
            std::partial_sort(ids.begin(), ids.begin() + keep, ids.end(),
                              [&](int x, int y) {
                                  if (logp_vec[x] != logp_vec[y]) return logp_vec[x] > logp_vec[y];
                                  return x < y;
                              });
            bool eos_seen = false;
            for (int k = 0; k < keep; ++k) {
                const int tok = ids[static_cast<std::size_t>(k)];
                if (tok == scorer.eos()) eos_seen = true;
                cands.push_back({b, tok, beams[b].logp + logp_vec[tok]});
            }
            if (!eos_seen) {  // a completed hypothesis is always considered
                cands.push_back({b, scorer.eos(), beams[b].logp + logp_vec[scorer.eos()]});
            }
        }

        std::vector<Entry> next;
        std::vector<Cand> live;
        for (const auto& c : cands) {
            if (c.token == scorer.eos()) {
                BeamResult r;
                r.tokens = beams[c.from].tokens;
                r.logp = c.logp;
                r.score = detail::norm_score(c.logp, r.tokens.size() + 1, alpha);
                offer_done(std::move(r));
            } else {
                live.push_back(c);
            }
        }
        std::sort(live.begin(), live.end(), [&](const Cand& x, const Cand& y) {
            if (x.logp != y.logp) return x.logp > y.logp;
            if (x.token != y.token) return x.token < y.token;
            return beams[x.from].tokens < beams[y.from].tokens;
        });
        if (live.size() > static_cast<std::size_t>(beam_width)) {
            live.resize(static_cast<std::size_t>(beam_width));
        }
        for (const auto& c : live) {
            Entry e;
            e.state = next_states[c.from];
            e.tokens = beams[c.from].tokens;
            e.tokens.push_back(c.token);
            e.logp = c.logp;
            next.push_back(std::move(e));
        }
        beams = std::move(next);
    }

    for (const auto& b : beams) {
        BeamResult r;
        r.tokens = b.tokens;
        r.logp = b.logp;
        r.score = detail::norm_score(b.logp, b.tokens.size(), alpha);
        offer_partial(std::move(r));
    }

    if (beam_width > 1) {
        BeamResult greedy = beam_search(scorer, 1, max_len, alpha);
        if (greedy.completed) offer_done(std::move(greedy));
        else offer_partial(std::move(greedy));
    }

    if (have_done) return best_done;
    if (have_partial) return best_partial;
    return {};
}

}  // namespace headliner::pgn
