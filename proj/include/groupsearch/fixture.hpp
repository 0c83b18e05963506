#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "groupsearch/corpus.hpp"

// Deterministic synthetic corpora for tests, benchmarks and demos. The
// vocabulary is themed and includes synonym clusters (a canonical term plus
// natural-language paraphrases of it) so semantic-miss scenarios can be
// staged: a paraphrase query shares no token with the post it describes.

namespace groupsearch::fixture {

struct SynonymCluster {
    std::string canonical;   // e.g. "cupcakes"
    std::string paraphrase;  // e.g. "small individual cakes with frosting"
    std::string topic;       // baking | drinks | meals
};

/// The 20 shipped clusters.
const std::vector<SynonymCluster>& synonym_clusters();

/// phrase -> cluster id, covering canonicals and paraphrases. Suitable for
/// EmbedderConfig::synonym_table and the mock judge.
std::unordered_map<std::string, int> synonym_table();

/// term -> topic tag for the mock judge ("somewhat relevant" = shared topic).
std::unordered_map<std::string, std::string> topic_table();

/// All single-token fixture vocabulary (topic fillers, neutral words,
/// canonical terms). Handy for normalization property sweeps.
std::vector<std::string> fixture_vocabulary();

/// Deterministic synthetic corpus: n_groups groups ("g0".."gN") with
/// posts_per_group posts each, drawing text from the themed vocabulary.
/// Every third post carries one synonym-cluster member (cycling through all
/// members), so any group with >= 3 * member_count posts contains every
/// cluster term at least once.
Corpus generate_fixture_corpus(std::uint64_t seed, std::size_t n_groups,
                               std::size_t posts_per_group);

/// Random vocabulary queries over the corpus groups (for oracle sweeps).
std::vector<QueryRecord> generate_fixture_queries(std::uint64_t seed, const Corpus& corpus,
                                                  std::size_t n_queries);

struct SemanticScenario {
    QueryRecord query;           // paraphrase query, shares no token with the target
    std::string target_post_id;  // post the embedding path should surface
};

struct ScenarioFixture {
    Corpus corpus;
    std::vector<SemanticScenario> scenarios;   // one per synonym cluster
    std::vector<QueryRecord> keyword_queries;  // exact-match queries (mixed fixture only)

    std::vector<QueryRecord> all_queries() const;
    std::vector<QueryRecord> semantic_queries() const;
};

/// Pure rescue staging: no post in a scenario group contains any token of any
/// paraphrase query, so the keyword path returns nothing for them.
ScenarioFixture make_semantic_fixture(std::uint64_t seed);

/// Rescue staging plus keyword-friendly queries and decoy posts. Each decoy
/// contains a stopword from one paraphrase, so the keyword path retrieves it,
/// but no content token or topic word, so the mock judge calls it irrelevant.
ScenarioFixture make_mixed_fixture(std::uint64_t seed);

}  // namespace groupsearch::fixture
