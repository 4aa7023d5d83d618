#include <doctest.h>

#include <random>
#include <stdexcept>

#include "headliner/humaneval.hpp"

using namespace headliner;
using humaneval::Choice;
using humaneval::VoteRecord;

namespace {

std::vector<VoteRecord> unanimous_fixture() {
    // 49 items all-MODEL, 8 all-DRAW, 43 all-HUMAN, 9 votes each
    std::vector<VoteRecord> votes;
    int item = 0;
    auto add_block = [&](int count, Choice c) {
        for (int i = 0; i < count; ++i, ++item) {
            for (int a = 0; a < 9; ++a) {
                votes.push_back({"item" + std::to_string(1000 + item),
                                 "ann" + std::to_string(a), c});
            }
        }
    };
    add_block(49, Choice::Model);
    add_block(8, Choice::Draw);
    add_block(43, Choice::Human);
    return votes;
}

}  // namespace

TEST_SUITE("humaneval") {

TEST_CASE("export_tasks") {
    std::vector<corpus::Article> articles = {
        {"a1", "человеческий заголовок один", "текст статьи один", ""},
        {"a2", "человеческий заголовок два", "текст\tс табом", ""},
        {"a3", "человеческий заголовок три", "ещё текст", ""},
    };
    std::vector<std::string> model = {"модельный один", "модельный два", "модельный три"};

    SUBCASE("deterministic for a fixed seed") {
        auto e1 = humaneval::export_tasks(articles, model, 7);
        auto e2 = humaneval::export_tasks(articles, model, 7);
        CHECK(e1.task_lines == e2.task_lines);
        CHECK(e1.key_lines == e2.key_lines);
    }
    SUBCASE("key file recovers origins exactly") {
        auto e = humaneval::export_tasks(articles, model, 3);
        REQUIRE(e.task_lines.size() == 4);  // header + 3
        REQUIRE(e.key_lines.size() == 4);
        for (std::size_t i = 1; i < e.task_lines.size(); ++i) {
            // split both lines
            auto split = [](const std::string& line) {
                std::vector<std::string> f;
                std::size_t start = 0;
                while (true) {
                    auto tab = line.find('\t', start);
                    f.push_back(line.substr(start, tab == std::string::npos ? tab
                                                                            : tab - start));
                    if (tab == std::string::npos) break;
                    start = tab + 1;
                }
                return f;
            };
            auto tf = split(e.task_lines[i]);
            auto kf = split(e.key_lines[i]);
            REQUIRE(tf.size() == 4);
            REQUIRE(kf.size() == 2);
            CHECK(tf[0] == kf[0]);
            const std::string& left = tf[2];
            const std::string& right = tf[3];
            const std::string& model_head = model[i - 1];
            const std::string& human_head = articles[i - 1].title;
            if (kf[1] == "MODEL") {
                CHECK(left == model_head);
                CHECK(right == human_head);
            } else {
                REQUIRE(kf[1] == "HUMAN");
                CHECK(left == human_head);
                CHECK(right == model_head);
            }
        }
    }
    SUBCASE("task file carries no origin labels") {
        auto e = humaneval::export_tasks(articles, model, 3);
        for (std::size_t i = 1; i < e.task_lines.size(); ++i) {
            CHECK(e.task_lines[i].find("model") == std::string::npos);
            CHECK(e.task_lines[i].find("MODEL") == std::string::npos);
            CHECK(e.task_lines[i].find("human") == std::string::npos);
            CHECK(e.task_lines[i].find("HUMAN") == std::string::npos);
        }
    }
    SUBCASE("both sides appear on the left across seeds") {
        bool saw_model_left = false, saw_human_left = false;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            auto e = humaneval::export_tasks(articles, model, seed);
            for (std::size_t i = 1; i < e.key_lines.size(); ++i) {
                if (e.key_lines[i].find("MODEL") != std::string::npos) saw_model_left = true;
                if (e.key_lines[i].find("HUMAN") != std::string::npos) saw_human_left = true;
            }
        }
        CHECK(saw_model_left);
        CHECK(saw_human_left);
    }
    SUBCASE("alignment mismatch is fatal") {
        CHECK_THROWS(humaneval::export_tasks(articles, {"только один"}, 1));
    }
}

TEST_CASE("aggregate") {
    SUBCASE("unanimous item counts for outcome and supermajority") {
        std::vector<VoteRecord> votes;
        for (int a = 0; a < 9; ++a) {
            votes.push_back({"i1", "ann" + std::to_string(a), Choice::Model});
        }
        auto s = humaneval::aggregate(votes);
        CHECK(s.n_items == 1);
        CHECK(s.model_win_rate == 1.0);
        CHECK(s.model_supermajority_rate == 1.0);
        CHECK(s.human_supermajority_rate == 0.0);
    }
    SUBCASE("plurality tie resolves to draw") {
        std::vector<VoteRecord> votes;
        for (int a = 0; a < 4; ++a) votes.push_back({"i1", "m" + std::to_string(a), Choice::Model});
        for (int a = 0; a < 4; ++a) votes.push_back({"i1", "h" + std::to_string(a), Choice::Human});
        votes.push_back({"i1", "d0", Choice::Draw});
        auto s = humaneval::aggregate(votes);
        CHECK(s.n_items == 1);
        CHECK(s.draw_rate == 1.0);
        CHECK(s.model_supermajority_rate == 0.0);
    }
    SUBCASE("the 100-item fixture reproduces the target proportions exactly") {
        auto s = humaneval::aggregate(unanimous_fixture());
        CHECK(s.n_items == 100);
        CHECK(s.model_win_rate == 0.49);
        CHECK(s.draw_rate == 0.08);
        CHECK(s.human_win_rate == 0.43);
        CHECK(s.model_supermajority_rate == 0.49);
        CHECK(s.human_supermajority_rate == 0.43);
        CHECK(s.model_win_rate + s.draw_rate + s.human_win_rate == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("items with the wrong vote count are excluded and reported") {
        auto votes = unanimous_fixture();
        votes.pop_back();  // one item now has 8 votes
        auto s = humaneval::aggregate(votes);
        CHECK(s.n_items == 99);
        REQUIRE(s.excluded_items.size() == 1);
        CHECK(s.excluded_items[0] == "item1099");
    }
    SUBCASE("duplicate (item, annotator) is fatal with both ids in the message") {
        std::vector<VoteRecord> votes = {{"i1", "a1", Choice::Model},
                                         {"i1", "a1", Choice::Human}};
        CHECK_THROWS_WITH_AS(humaneval::aggregate(votes), doctest::Contains("i1"),
                             std::runtime_error);
    }
    SUBCASE("relabeling MODEL and HUMAN swaps the rates exactly") {
        std::mt19937_64 gen(83);
        for (int iter = 0; iter < 1000; ++iter) {
            std::vector<VoteRecord> votes;
            const auto n_items = 1 + gen() % 12;
            for (std::size_t it = 0; it < n_items; ++it) {
                for (int a = 0; a < 9; ++a) {
                    Choice c = static_cast<Choice>(gen() % 3);
                    votes.push_back({"i" + std::to_string(it), "a" + std::to_string(a), c});
                }
            }
            auto flipped = votes;
            for (auto& v : flipped) {
                if (v.choice == Choice::Model) v.choice = Choice::Human;
                else if (v.choice == Choice::Human) v.choice = Choice::Model;
            }
            auto s1 = humaneval::aggregate(votes);
            auto s2 = humaneval::aggregate(flipped);
            CHECK(s1.model_win_rate == s2.human_win_rate);
            CHECK(s1.human_win_rate == s2.model_win_rate);
            CHECK(s1.draw_rate == s2.draw_rate);
            CHECK(s1.model_supermajority_rate == s2.human_supermajority_rate);
            CHECK(s1.human_supermajority_rate == s2.model_supermajority_rate);
            CHECK(s1.pooled_model_fraction == s2.pooled_human_fraction);
            // with supermajority > quorum/2, a supermajority implies the plurality
            CHECK(s1.model_supermajority_rate <= s1.model_win_rate + 1e-12);
        }
    }
    SUBCASE("majority-threshold rule is stricter than plurality") {
        std::vector<VoteRecord> votes;
        for (int a = 0; a < 4; ++a) votes.push_back({"i1", "m" + std::to_string(a), Choice::Model});
        for (int a = 0; a < 3; ++a) votes.push_back({"i1", "h" + std::to_string(a), Choice::Human});
        for (int a = 0; a < 2; ++a) votes.push_back({"i1", "d" + std::to_string(a), Choice::Draw});
        auto plurality = humaneval::aggregate(votes);
        CHECK(plurality.model_win_rate == 1.0);

        humaneval::AggregateOptions strict;
        strict.rule = humaneval::OutcomeRule::Majority;
        strict.majority_threshold = 5;
        auto majority = humaneval::aggregate(votes, strict);
        CHECK(majority.model_win_rate == 0.0);
        CHECK(majority.draw_rate == 1.0);
    }
    SUBCASE("pooled per-vote fractions accompany the plurality rates") {
        std::vector<VoteRecord> votes;
        for (int a = 0; a < 5; ++a) votes.push_back({"i1", "m" + std::to_string(a), Choice::Model});
        for (int a = 0; a < 3; ++a) votes.push_back({"i1", "h" + std::to_string(a), Choice::Human});
        votes.push_back({"i1", "d0", Choice::Draw});
        auto s = humaneval::aggregate(votes);
        CHECK(s.pooled_model_fraction == doctest::Approx(5.0 / 9.0));
        CHECK(s.pooled_human_fraction == doctest::Approx(3.0 / 9.0));
        CHECK(s.pooled_draw_fraction == doctest::Approx(1.0 / 9.0));
    }
}

TEST_CASE("votes tsv parsing and summary json") {
    std::vector<std::string> lines = {
        "item_id\tannotator_id\tchoice",
        "i1\ta1\tMODEL",
        "i1\ta2\tHUMAN",
        "i1\ta3\tDRAW",
    };
    auto votes = humaneval::parse_votes_tsv(lines);
    REQUIRE(votes.size() == 3);
    CHECK(votes[0].choice == Choice::Model);
    CHECK(votes[2].choice == Choice::Draw);

    CHECK_THROWS(humaneval::parse_votes_tsv({"i1\ta1\tMAYBE"}));
    CHECK_THROWS(humaneval::parse_votes_tsv({"i1\ta1"}));

    humaneval::AggregateOptions opts;
    opts.quorum = 3;
    opts.supermajority = 2;
    auto s = humaneval::aggregate(votes, opts);
    auto j = humaneval::summary_to_json(s);
    CHECK(j.find("model_win_rate") != std::string::npos);
    CHECK(j.find("pooled_vote_fractions") != std::string::npos);
    CHECK(j.find("item_outcomes") != std::string::npos);
}

}  // TEST_SUITE
