#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "groupsearch/errors.hpp"

namespace groupsearch {

/// A group-scoped document. Engagement counts default to 0 when the source
/// record omits them.
struct Post {
    std::string post_id;
    std::string group_id;
    std::string author_id;
    std::string text;
    std::int64_t created_at = 0;  // seconds since epoch
    std::uint32_t clicks = 0;
    std::uint32_t shares = 0;
    std::uint32_t comments = 0;

    bool operator==(const Post&) const = default;
};

struct Group {
    std::string group_id;
    std::string name;

    bool operator==(const Group&) const = default;
};

struct QueryRecord {
    std::string query_id;
    std::string group_id;
    std::string query_text;

    bool operator==(const QueryRecord&) const = default;
};

/// Immutable once loaded; safe to read from many threads concurrently.
class Corpus {
public:
    Corpus() = default;

    void add_group(Group g);
    void add_post(Post p);  // throws DuplicateId / UnknownGroup / MalformedRecord

    const std::vector<Group>& groups() const { return groups_; }
    const std::vector<Post>& posts() const { return posts_; }

    bool has_group(const std::string& group_id) const;
    bool has_post(const std::string& post_id) const;
    const Post& post(const std::string& post_id) const;  // throws UnknownPost
    const Group& group(const std::string& group_id) const;  // throws UnknownGroup

    std::size_t post_count(const std::string& group_id) const;  // throws UnknownGroup

    /// Post ids for a group, sorted ascending.
    const std::vector<std::string>& group_posts(const std::string& group_id) const;

    /// Group ids sorted ascending; index builds iterate in this order so
    /// rebuilds are reproducible.
    std::vector<std::string> group_ids() const;

    bool operator==(const Corpus& other) const;

private:
    std::vector<Group> groups_;
    std::vector<Post> posts_;
    std::unordered_map<std::string, std::size_t> post_index_;
    std::unordered_map<std::string, std::size_t> group_index_;
    std::map<std::string, std::vector<std::string>> posts_by_group_;
};

/// Reads a line-delimited corpus file: one JSON object per line. Objects with
/// a "post_id" key are posts; objects with "group_id" but no "post_id" declare
/// groups. Unknown keys are ignored. Duplicate post ids and posts referencing
/// undeclared groups are hard errors.
Corpus load_corpus(const std::string& path);

/// Writes the corpus in the same line-delimited format (groups first, then
/// posts). load_corpus(save_corpus(c)) == c.
void save_corpus(const Corpus& corpus, const std::string& path);

/// Query-set file: one JSON object per line with query_id, group_id, query_text.
std::vector<QueryRecord> load_query_set(const std::string& path);
void save_query_set(const std::vector<QueryRecord>& queries, const std::string& path);

}  // namespace groupsearch
