#pragma once

#include <memory>
#include <string>

#include "groupsearch/engine.hpp"

namespace groupsearch {

/// HTTP front end over an immutable loaded Engine.
///
///   POST /v1/groups/{group_id}/search   {"query": ..., "k": 10, "fusion": {...}}
///   GET  /v1/health                     {"status": "ready" | "loading"}
///   GET  /v1/stats                      corpus and index counters
///
/// The service reports "loading" until set_engine() installs an engine;
/// requests against shared state are read-only, so any number can run
/// concurrently. 4xx for invalid input; 5xx bodies never leak internals.
class SearchService {
public:
    SearchService();
    ~SearchService();

    SearchService(const SearchService&) = delete;
    SearchService& operator=(const SearchService&) = delete;

    void set_engine(std::shared_ptr<const Engine> engine);
    bool ready() const;

    /// Binds and serves on a background thread. Returns the bound port
    /// (picks a free one when port == 0). Throws Error(Config) when the
    /// address cannot be bound.
    int start(const std::string& host, int port);

    /// Serves on the calling thread until stop() is invoked elsewhere.
    void run(const std::string& host, int port);

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace groupsearch
