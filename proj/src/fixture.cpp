#include "groupsearch/fixture.hpp"

#include <algorithm>
#include <random>

#include "groupsearch/textproc.hpp"

namespace groupsearch::fixture {

namespace {

struct TopicVocab {
    std::string topic;
    std::vector<std::string> words;  // safe fillers: never collide with paraphrase tokens
};

const std::vector<TopicVocab>& topic_vocab() {
    static const std::vector<TopicVocab> vocab = {
        {"baking",
         {"muffins", "scones", "oven", "flour", "icing", "sprinkles", "cinnamon", "vanilla",
          "crust", "glaze"}},
        {"drinks",
         {"latte", "mocha", "brew", "barista", "teapot", "juice", "cider", "lemonade", "matcha",
          "frappe"}},
        {"meals",
         {"noodles", "dumplings", "curry", "salad", "soup", "stew", "ramen", "pizza", "falafel",
          "hummus"}},
        {"sports",
         {"basketball", "tennis", "soccer", "marathon", "cycling", "yoga", "climbing", "swimming",
          "volleyball", "jogging"}},
        {"music",
         {"guitar", "violin", "drums", "piano", "concert", "melody", "chorus", "orchestra",
          "playlist", "rehearsal"}},
    };
    return vocab;
}

// No topic tag; used for decoy posts so the mock judge finds nothing to share.
const std::vector<std::string>& neutral_words() {
    static const std::vector<std::string> words = {
        "weekend",  "meetup",   "reminder", "schedule", "carpool",
        "newsletter", "strolling", "friends", "autumn",  "neighborhood"};
    return words;
}

// Content words inside paraphrases, tagged so a paraphrase query still shares
// a topic with same-theme posts.
const std::vector<std::pair<std::string, std::string>>& paraphrase_topic_words() {
    static const std::vector<std::pair<std::string, std::string>> words = {
        {"cakes", "baking"},    {"frosting", "baking"}, {"bread", "baking"},
        {"loaf", "baking"},     {"pastry", "baking"},   {"meringue", "baking"},
        {"cookies", "baking"},  {"chocolate", "baking"}, {"rolls", "baking"},
        {"baked", "baking"},    {"griddle", "baking"},  {"batter", "baking"},
        {"biscuit", "baking"},  {"dessert", "baking"},  {"oat", "baking"},
        {"toasted", "baking"},  {"ice", "baking"},      {"cream", "baking"},
        {"coffee", "drinks"},   {"drink", "drinks"},    {"tea", "drinks"},
        {"frothy", "drinks"},   {"pasta", "meals"},     {"casserole", "meals"},
        {"rice", "meals"},      {"fish", "meals"},      {"tortilla", "meals"},
    };
    return words;
}

std::uint64_t next(std::mt19937_64& rng) { return rng(); }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(next(rng) % n);
}

const std::string& pick_word(std::mt19937_64& rng, const std::vector<std::string>& words) {
    return words[pick(rng, words.size())];
}

}  // namespace

const std::vector<SynonymCluster>& synonym_clusters() {
    static const std::vector<SynonymCluster> clusters = {
        {"cupcakes", "small individual cakes with frosting", "baking"},
        {"cappuccino", "a frothy italian coffee drink", "drinks"},
        {"sourdough", "the tangy fermented bread loaf", "baking"},
        {"espresso", "a concentrated shot of coffee", "drinks"},
        {"croissant", "the flaky buttery french pastry", "baking"},
        {"macarons", "the almond meringue sandwich cookies", "baking"},
        {"gelato", "the dense italian ice cream", "baking"},
        {"bagels", "rolls that are boiled and ring shaped", "baking"},
        {"brownies", "the fudgy chocolate squares", "baking"},
        {"pretzels", "a twisted salty baked snack", "baking"},
        {"smoothie", "a blended fruit drink", "drinks"},
        {"lasagna", "a layered pasta casserole", "meals"},
        {"sushi", "rolls of vinegared rice and fish", "meals"},
        {"tacos", "a folded tortilla street snack", "meals"},
        {"pancakes", "the fluffy griddle breakfast cakes", "baking"},
        {"waffles", "the crisp gridded batter cakes", "baking"},
        {"burrito", "a wrapped bean tortilla meal", "meals"},
        {"kombucha", "a fizzy fermented tea", "drinks"},
        {"granola", "the toasted oat clusters", "baking"},
        {"cheesecake", "a creamy baked biscuit dessert", "baking"},
    };
    return clusters;
}

std::unordered_map<std::string, int> synonym_table() {
    std::unordered_map<std::string, int> table;
    const auto& clusters = synonym_clusters();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        table[clusters[i].canonical] = static_cast<int>(i);
        table[normalize(clusters[i].paraphrase)] = static_cast<int>(i);
    }
    return table;
}

std::unordered_map<std::string, std::string> topic_table() {
    std::unordered_map<std::string, std::string> table;
    for (const auto& tv : topic_vocab())
        for (const auto& w : tv.words) table[w] = tv.topic;
    for (const auto& c : synonym_clusters()) table[c.canonical] = c.topic;
    for (const auto& [word, topic] : paraphrase_topic_words()) table[word] = topic;
    return table;
}

std::vector<std::string> fixture_vocabulary() {
    std::vector<std::string> all;
    for (const auto& tv : topic_vocab()) all.insert(all.end(), tv.words.begin(), tv.words.end());
    all.insert(all.end(), neutral_words().begin(), neutral_words().end());
    for (const auto& c : synonym_clusters()) all.push_back(c.canonical);
    return all;
}

Corpus generate_fixture_corpus(std::uint64_t seed, std::size_t n_groups,
                               std::size_t posts_per_group) {
    std::mt19937_64 rng(seed);
    const auto vocab = fixture_vocabulary();
    const auto& clusters = synonym_clusters();

    // canonical terms and paraphrases, interleaved for the coverage cycle
    std::vector<std::string> members;
    for (const auto& c : clusters) {
        members.push_back(c.canonical);
        members.push_back(c.paraphrase);
    }

    Corpus corpus;
    for (std::size_t g = 0; g < n_groups; ++g) {
        std::string gid = "g" + std::to_string(g);
        corpus.add_group({gid, "group " + std::to_string(g)});
        for (std::size_t i = 0; i < posts_per_group; ++i) {
            Post p;
            p.post_id = gid + "-p" + std::to_string(i);
            p.group_id = gid;
            p.author_id = "u" + std::to_string(pick(rng, 500));
            std::size_t len = 5 + pick(rng, 11);
            std::string text;
            for (std::size_t w = 0; w < len; ++w) {
                if (w) text.push_back(' ');
                text += pick_word(rng, vocab);
            }
            if (i % 3 == 0) {
                text.push_back(' ');
                text += members[(i / 3) % members.size()];
            }
            p.text = std::move(text);
            p.created_at = 1700000000 + static_cast<std::int64_t>(pick(rng, 365ull * 86400));
            p.clicks = static_cast<std::uint32_t>(pick(rng, 50));
            p.shares = static_cast<std::uint32_t>(pick(rng, 10));
            p.comments = static_cast<std::uint32_t>(pick(rng, 20));
            corpus.add_post(std::move(p));
        }
    }
    return corpus;
}

std::vector<QueryRecord> generate_fixture_queries(std::uint64_t seed, const Corpus& corpus,
                                                  std::size_t n_queries) {
    std::mt19937_64 rng(seed);
    const auto vocab = fixture_vocabulary();
    const auto groups = corpus.group_ids();
    std::vector<QueryRecord> queries;
    queries.reserve(n_queries);
    for (std::size_t i = 0; i < n_queries; ++i) {
        QueryRecord q;
        q.query_id = "q" + std::to_string(i);
        q.group_id = groups[pick(rng, groups.size())];
        std::size_t len = 1 + pick(rng, 4);
        for (std::size_t w = 0; w < len; ++w) {
            if (w) q.query_text.push_back(' ');
            q.query_text += pick_word(rng, vocab);
        }
        queries.push_back(std::move(q));
    }
    return queries;
}

std::vector<QueryRecord> ScenarioFixture::all_queries() const {
    std::vector<QueryRecord> out = keyword_queries;
    for (const auto& s : scenarios) out.push_back(s.query);
    std::sort(out.begin(), out.end(),
              [](const QueryRecord& a, const QueryRecord& b) { return a.query_id < b.query_id; });
    return out;
}

std::vector<QueryRecord> ScenarioFixture::semantic_queries() const {
    std::vector<QueryRecord> out;
    for (const auto& s : scenarios) out.push_back(s.query);
    return out;
}

namespace {

ScenarioFixture make_scenario_fixture(std::uint64_t seed, bool mixed) {
    std::mt19937_64 rng(seed);
    const auto& clusters = synonym_clusters();
    const auto& stopwords = StopwordList::builtin();

    ScenarioFixture fx;
    std::vector<std::string> topics = {"baking", "drinks", "meals"};
    for (const auto& t : topics) fx.corpus.add_group({"g-" + t, t + " group"});

    // Topic filler posts. Their vocabulary is disjoint from every paraphrase
    // token, so paraphrase queries cannot match them through the keyword path.
    for (const auto& tv : topic_vocab()) {
        bool scenario_topic =
            std::find(topics.begin(), topics.end(), tv.topic) != topics.end();
        if (!scenario_topic) continue;
        for (int i = 0; i < 30; ++i) {
            Post p;
            p.post_id = "fill-" + tv.topic + "-" + std::to_string(i);
            p.group_id = "g-" + tv.topic;
            p.author_id = "u" + std::to_string(pick(rng, 100));
            std::size_t len = 3 + pick(rng, 4);
            for (std::size_t w = 0; w < len; ++w) {
                if (w) p.text.push_back(' ');
                p.text += pick_word(rng, tv.words);
            }
            p.created_at = 1700000000 + static_cast<std::int64_t>(pick(rng, 180ull * 86400));
            p.clicks = static_cast<std::uint32_t>(pick(rng, 20));
            fx.corpus.add_post(std::move(p));
        }
    }

    // One target post per cluster: just the canonical term, so a paraphrase
    // query reaches it only through the embedding path.
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        Post p;
        p.post_id = "target-" + clusters[c].canonical;
        p.group_id = "g-" + clusters[c].topic;
        p.author_id = "u" + std::to_string(pick(rng, 100));
        p.text = clusters[c].canonical;
        p.created_at = 1700000000 + static_cast<std::int64_t>(pick(rng, 180ull * 86400));

        SemanticScenario sc;
        sc.query.query_id = "sem-" + std::to_string(c);
        sc.query.group_id = p.group_id;
        sc.query.query_text = clusters[c].paraphrase;
        sc.target_post_id = p.post_id;
        fx.scenarios.push_back(std::move(sc));
        fx.corpus.add_post(std::move(p));
    }

    if (mixed) {
        // Decoys: hooked on a stopword of the paraphrase, judged irrelevant.
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            std::string hook;
            for (const auto& tok : tokenize(clusters[c].paraphrase)) {
                if (stopwords.contains(tok)) {
                    hook = tok;
                    break;
                }
            }
            Post p;
            p.post_id = "decoy-" + std::to_string(c);
            p.group_id = fx.scenarios[c].query.group_id;
            p.author_id = "u" + std::to_string(pick(rng, 100));
            const auto& nw = neutral_words();
            p.text = nw[c % nw.size()] + " " + hook + " " + nw[(c + 3) % nw.size()] + " " +
                     nw[(c + 7) % nw.size()];
            p.created_at = 1700000000 + static_cast<std::int64_t>(pick(rng, 180ull * 86400));
            fx.corpus.add_post(std::move(p));
        }

        // Keyword-friendly queries: canonical terms and filler words that
        // appear verbatim in posts.
        int qid = 0;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            QueryRecord q;
            q.query_id = "kw-" + std::to_string(qid++);
            q.group_id = "g-" + clusters[c].topic;
            q.query_text = clusters[c].canonical;
            fx.keyword_queries.push_back(std::move(q));
        }
        for (const auto& tv : topic_vocab()) {
            if (std::find(topics.begin(), topics.end(), tv.topic) == topics.end()) continue;
            for (int i = 0; i < 4; ++i) {
                QueryRecord q;
                q.query_id = "kw-" + std::to_string(qid++);
                q.group_id = "g-" + tv.topic;
                q.query_text = tv.words[pick(rng, tv.words.size())];
                fx.keyword_queries.push_back(std::move(q));
            }
        }
    }
    return fx;
}

}  // namespace

ScenarioFixture make_semantic_fixture(std::uint64_t seed) {
    return make_scenario_fixture(seed, false);
}

ScenarioFixture make_mixed_fixture(std::uint64_t seed) {
    return make_scenario_fixture(seed, true);
}

}  // namespace groupsearch::fixture
