#include <catch_amalgamated.hpp>

#include <numeric>

#include "support/fixtures.hpp"
#include "toxtopic/lda.hpp"

using namespace toxtopic;
using Catch::Matchers::WithinAbs;

namespace {

struct Tiny {
    Vocabulary vocab;
    std::vector<BowDocument> docs;
};

Tiny tiny_corpus() {
    const std::vector<TokenSequence> toks{{"red", "green", "red"}, {"blue"}, {"green", "blue", "blue"}};
    Tiny t{build_vocab(toks, 1), {}};
    for (std::size_t d = 0; d < toks.size(); ++d) t.docs.push_back(to_bow(toks[d], t.vocab, d));
    return t;
}

LdaConfig planted_config() {
    LdaConfig cfg;
    cfg.k = 2;
    cfg.iterations = 200;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("k = 1 puts every token in topic 0") {
    const auto t = tiny_corpus();
    LdaConfig cfg;
    cfg.k = 1;
    cfg.iterations = 10;
    const auto m = fit_lda(t.docs, t.vocab, cfg);
    for (const auto& z : m.assignments())
        for (auto zi : z) CHECK(zi == 0);
    for (const auto& th : m.doc_theta()) CHECK(th.theta == std::vector<double>{1.0});
    CHECK(m.topic_totals()[0] == 7);
    // phi is (count + beta) / (7 + V beta) with counts red 2, green 2, blue 3.
    const double denom = 7.0 + 3 * 0.01;
    CHECK_THAT(m.phi(0, *t.vocab.id_of("blue")), WithinAbs(3.01 / denom, 1e-15));
    CHECK_THAT(m.phi(0, *t.vocab.id_of("red")), WithinAbs(2.01 / denom, 1e-15));
}

TEST_CASE("same seed gives identical assignments") {
    const auto pc = fixtures::planted_corpus(60, 20);
    auto cfg = planted_config();
    cfg.iterations = 30;
    const auto a = fit_lda(pc.docs, pc.vocab, cfg);
    const auto b = fit_lda(pc.docs, pc.vocab, cfg);
    CHECK(a.assignments() == b.assignments());
    cfg.seed = 6;
    const auto c = fit_lda(pc.docs, pc.vocab, cfg);
    CHECK(a.assignments() != c.assignments());
}

TEST_CASE("planted two-topic corpus is recovered") {
    const auto pc = fixtures::planted_corpus();
    const auto m = fit_lda(pc.docs, pc.vocab, planted_config());
    std::vector<std::size_t> assigned;
    for (const auto& th : m.doc_theta()) assigned.push_back(dominant_topic(th));
    CHECK(fixtures::best_permutation_accuracy(assigned, pc.source) >= 0.95);

    // The topic that owns source 0 should give a pure source-0 document a
    // clear majority after fold-in.
    std::size_t same = 0;
    for (std::size_t i = 0; i < assigned.size(); ++i) same += assigned[i] == pc.source[i];
    const TopicId topic_of_p = same * 2 >= assigned.size() ? 0 : 1;
    TokenSequence pure;
    for (int i = 0; i < 30; ++i) pure.push_back(pc.topic_words[0][static_cast<std::size_t>(i)]);
    const auto th = infer_theta(m, to_bow(pure, pc.vocab), 77);
    CHECK(th.theta[topic_of_p] > 0.9);
    CHECK(dominant_topic(th) == topic_of_p);

    const auto top = top_words(m, topic_of_p, 5);
    for (const auto& w : top) CHECK(w.front() == 'p');
}

TEST_CASE("fold-in of an empty document is the uniform prior") {
    const auto t = tiny_corpus();
    LdaConfig cfg;
    cfg.iterations = 5;
    const auto m = fit_lda(t.docs, t.vocab, cfg);
    const auto th = infer_theta(m, BowDocument{}, 1);
    for (double v : th.theta) CHECK_THAT(v, WithinAbs(1.0 / 3.0, 1e-15));
    CHECK(dominant_topic(th) == 0);
}

TEST_CASE("infer_theta is deterministic per seed") {
    const auto pc = fixtures::planted_corpus(60, 20);
    auto cfg = planted_config();
    cfg.iterations = 20;
    const auto m = fit_lda(pc.docs, pc.vocab, cfg);
    CHECK(infer_theta(m, pc.docs[3], 9).theta == infer_theta(m, pc.docs[3], 9).theta);
}

TEST_CASE("dominant_topic ties go to the lowest index") {
    CHECK(dominant_topic({{0.25, 0.25, 0.5}}) == 2);
    CHECK(dominant_topic({{0.4, 0.2, 0.4}}) == 0);
    CHECK(dominant_topic({{0.1, 0.45, 0.45}}) == 1);
    CHECK_THROWS_AS(dominant_topic({}), ValidationError);
}

TEST_CASE("token counts are conserved on every sweep (property)") {
    const auto pc = fixtures::planted_corpus(80, 15);
    std::uint64_t expected = 0;
    for (const auto& d : pc.docs) expected += d.token_ids.size();
    for (std::size_t k : {1u, 2u, 5u}) {
        auto cfg = planted_config();
        cfg.k = k;
        cfg.iterations = 25;
        std::size_t sweeps = 0;
        LdaFitOptions opts;
        opts.on_sweep = [&](const SweepStats& s) {
            CHECK(s.sweep == sweeps);
            ++sweeps;
            const auto sum =
                std::accumulate(s.topic_totals.begin(), s.topic_totals.end(), std::uint64_t{0});
            CHECK(sum == expected);
            CHECK(s.total_tokens == expected);
        };
        const auto m = fit_lda(pc.docs, pc.vocab, cfg, opts);
        CHECK(sweeps == 26);
        // Final per-topic totals also match a recount of the assignments.
        std::vector<std::uint64_t> recount(k, 0);
        for (const auto& z : m.assignments())
            for (auto zi : z) ++recount[zi];
        CHECK(recount == m.topic_totals());
    }
}

TEST_CASE("log-likelihood rises from the random start") {
    const auto pc = fixtures::planted_corpus(200, 30);
    auto cfg = planted_config();
    cfg.iterations = 200;
    const auto m = fit_lda(pc.docs, pc.vocab, cfg);
    const auto& tr = m.likelihood_trace();
    REQUIRE(tr.size() == 5);
    CHECK(tr.front().first == 0);
    CHECK(tr.back().first == 200);
    CHECK(tr.back().second > tr.front().second);
}

TEST_CASE("phi rows and theta are distributions (property)") {
    const auto pc = fixtures::planted_corpus(40, 12, 0.7, 31);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto cfg = planted_config();
        cfg.k = 4;
        cfg.iterations = 15;
        cfg.seed = seed;
        const auto m = fit_lda(pc.docs, pc.vocab, cfg);
        for (TopicId t = 0; t < 4; ++t) {
            const auto row = m.phi_row(t);
            CHECK_THAT(std::accumulate(row.begin(), row.end(), 0.0), WithinAbs(1.0, 1e-9));
        }
        for (const auto& th : m.doc_theta())
            CHECK_THAT(std::accumulate(th.theta.begin(), th.theta.end(), 0.0), WithinAbs(1.0, 1e-9));
        const auto inferred = infer_theta(m, pc.docs[0], seed);
        CHECK_THAT(std::accumulate(inferred.theta.begin(), inferred.theta.end(), 0.0),
                   WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("top_words orders by probability then term") {
    const auto t = tiny_corpus();
    LdaConfig cfg;
    cfg.k = 1;
    cfg.iterations = 3;
    const auto m = fit_lda(t.docs, t.vocab, cfg);
    CHECK(top_words(m, 0, 5) == std::vector<std::string>{"blue", "green", "red"});
    CHECK(top_words(m, 0, 1) == std::vector<std::string>{"blue"});
    CHECK(format_topics(m, 2) == "0 : blue green\n");
    CHECK_THROWS_AS(top_words(m, 1), ValidationError);
}

TEST_CASE("fit_lda rejects bad input") {
    const auto t = tiny_corpus();
    LdaConfig cfg;
    cfg.k = 0;
    CHECK_THROWS_AS(fit_lda(t.docs, t.vocab, cfg), ValidationError);
    cfg = LdaConfig{};
    cfg.alpha = 0;
    CHECK_THROWS_AS(fit_lda(t.docs, t.vocab, cfg), ValidationError);
    CHECK_THROWS_AS(fit_lda({BowDocument{}}, t.vocab, LdaConfig{}), ValidationError);
    CHECK_THROWS_AS(fit_lda({BowDocument{0, {99}}}, t.vocab, LdaConfig{}), ValidationError);
}
