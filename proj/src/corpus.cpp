#include "groupsearch/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "groupsearch/textproc.hpp"

namespace groupsearch {

using json = nlohmann::json;

void Corpus::add_group(Group g) {
    if (g.group_id.empty()) throw Error(ErrorCode::MalformedRecord, "group with empty group_id");
    if (group_index_.count(g.group_id))
        throw Error(ErrorCode::DuplicateId, "duplicate group_id: " + g.group_id);
    group_index_[g.group_id] = groups_.size();
    posts_by_group_.emplace(g.group_id, std::vector<std::string>{});
    groups_.push_back(std::move(g));
}

void Corpus::add_post(Post p) {
    if (p.post_id.empty()) throw Error(ErrorCode::MalformedRecord, "post with empty post_id");
    if (post_index_.count(p.post_id))
        throw Error(ErrorCode::DuplicateId, "duplicate post_id: " + p.post_id);
    if (!group_index_.count(p.group_id))
        throw Error(ErrorCode::UnknownGroup, "post " + p.post_id + " references undeclared group: " + p.group_id);
    if (p.created_at < 0)
        throw Error(ErrorCode::MalformedRecord, "post " + p.post_id + " has negative created_at");
    if (normalize(p.text).empty())
        throw Error(ErrorCode::MalformedRecord, "post " + p.post_id + " has empty text after normalization");

    post_index_[p.post_id] = posts_.size();
    auto& ids = posts_by_group_[p.group_id];
    ids.insert(std::lower_bound(ids.begin(), ids.end(), p.post_id), p.post_id);
    posts_.push_back(std::move(p));
}

bool Corpus::has_group(const std::string& group_id) const {
    return group_index_.count(group_id) > 0;
}

bool Corpus::has_post(const std::string& post_id) const {
    return post_index_.count(post_id) > 0;
}

const Post& Corpus::post(const std::string& post_id) const {
    auto it = post_index_.find(post_id);
    if (it == post_index_.end()) throw Error(ErrorCode::UnknownPost, post_id);
    return posts_[it->second];
}

const Group& Corpus::group(const std::string& group_id) const {
    auto it = group_index_.find(group_id);
    if (it == group_index_.end()) throw Error(ErrorCode::UnknownGroup, group_id);
    return groups_[it->second];
}

std::size_t Corpus::post_count(const std::string& group_id) const {
    return group_posts(group_id).size();
}

const std::vector<std::string>& Corpus::group_posts(const std::string& group_id) const {
    auto it = posts_by_group_.find(group_id);
    if (it == posts_by_group_.end()) throw Error(ErrorCode::UnknownGroup, group_id);
    return it->second;
}

std::vector<std::string> Corpus::group_ids() const {
    std::vector<std::string> ids;
    ids.reserve(groups_.size());
    for (const auto& [gid, _] : posts_by_group_) ids.push_back(gid);
    return ids;
}

bool Corpus::operator==(const Corpus& other) const {
    // Order-insensitive: two corpora are equal when they hold the same groups
    // and posts.
    auto sorted_groups = [](const Corpus& c) {
        auto g = c.groups_;
        std::sort(g.begin(), g.end(),
                  [](const Group& a, const Group& b) { return a.group_id < b.group_id; });
        return g;
    };
    auto sorted_posts = [](const Corpus& c) {
        auto p = c.posts_;
        std::sort(p.begin(), p.end(),
                  [](const Post& a, const Post& b) { return a.post_id < b.post_id; });
        return p;
    };
    return sorted_groups(*this) == sorted_groups(other) &&
           sorted_posts(*this) == sorted_posts(other);
}

namespace {

std::string require_string(const json& j, const char* key, std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw Error(ErrorCode::MalformedRecord,
                    "line " + std::to_string(line_no) + ": missing or non-string \"" + key + "\"");
    return it->get<std::string>();
}

std::uint32_t optional_count(const json& j, const char* key, std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end()) return 0;  // engagement counts default to 0
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
        throw Error(ErrorCode::MalformedRecord,
                    "line " + std::to_string(line_no) + ": \"" + std::string(key) +
                        "\" must be a non-negative integer");
    return static_cast<std::uint32_t>(it->get<std::int64_t>());
}

}  // namespace

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open corpus file: " + path);

    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": not a JSON object");

        if (j.contains("post_id")) {
            Post p;
            p.post_id = require_string(j, "post_id", line_no);
            p.group_id = require_string(j, "group_id", line_no);
            p.author_id = j.value("author_id", std::string{});
            p.text = require_string(j, "text", line_no);
            auto ts = j.find("created_at");
            if (ts != j.end()) {
                if (!ts->is_number_integer())
                    throw Error(ErrorCode::MalformedRecord,
                                "line " + std::to_string(line_no) + ": \"created_at\" must be an integer");
                p.created_at = ts->get<std::int64_t>();
            }
            p.clicks = optional_count(j, "clicks", line_no);
            p.shares = optional_count(j, "shares", line_no);
            p.comments = optional_count(j, "comments", line_no);
            try {
                corpus.add_post(std::move(p));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::MalformedRecord)
                    throw Error(ErrorCode::MalformedRecord,
                                "line " + std::to_string(line_no) + ": " + e.what());
                throw;
            }
        } else if (j.contains("group_id")) {
            Group g;
            g.group_id = require_string(j, "group_id", line_no);
            g.name = j.value("name", g.group_id);
            corpus.add_group(std::move(g));
        } else {
            throw Error(ErrorCode::MalformedRecord,
                        "line " + std::to_string(line_no) + ": record is neither a group nor a post");
        }
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
    for (const auto& g : corpus.groups()) {
        json j{{"group_id", g.group_id}, {"name", g.name}};
        out << j.dump() << '\n';
    }
    for (const auto& p : corpus.posts()) {
        json j{{"post_id", p.post_id},   {"group_id", p.group_id}, {"author_id", p.author_id},
               {"text", p.text},         {"created_at", p.created_at}, {"clicks", p.clicks},
               {"shares", p.shares},     {"comments", p.comments}};
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

std::vector<QueryRecord> load_query_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open query-set file: " + path);

    std::vector<QueryRecord> queries;
    std::unordered_map<std::string, bool> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": not a JSON object");
        QueryRecord q;
        q.query_id = require_string(j, "query_id", line_no);
        q.group_id = require_string(j, "group_id", line_no);
        q.query_text = require_string(j, "query_text", line_no);
        if (q.query_text.empty())
            throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": empty query_text");
        if (seen[q.query_id])
            throw Error(ErrorCode::DuplicateId, "duplicate query_id: " + q.query_id);
        seen[q.query_id] = true;
        queries.push_back(std::move(q));
    }
    return queries;
}

void save_query_set(const std::vector<QueryRecord>& queries, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
    for (const auto& q : queries) {
        json j{{"query_id", q.query_id}, {"group_id", q.group_id}, {"query_text", q.query_text}};
        out << j.dump() << '\n';
    }
}

}  // namespace groupsearch
