#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "groupsearch/errors.hpp"

// Little-endian binary readers/writers for the versioned index containers.
// Every container starts with an 8-byte magic, a u32 format version and a
// u32 payload kind; loaders reject anything they do not recognise.

namespace groupsearch::binio {

inline constexpr char kMagic[8] = {'G', 'S', 'R', 'C', 'H', 'I', 'D', 'X'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class PayloadKind : std::uint32_t {
    LexicalIndex = 1,
    VectorIndex = 2,
};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
    }

    void header(PayloadKind kind) {
        out_.write(kMagic, sizeof(kMagic));
        u32(kFormatVersion);
        u32(static_cast<std::uint32_t>(kind));
    }

    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, sizeof(v)); }
    void u64(std::uint64_t v) { raw(&v, sizeof(v)); }
    void f32(float v) { raw(&v, sizeof(v)); }
    void f64(double v) { raw(&v, sizeof(v)); }

    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    void f32_array(const std::vector<float>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(float));
    }

    void f64_array(const std::vector<double>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }

    void close() {
        out_.close();
        if (!out_) throw Error(ErrorCode::Io, "write failed while closing index file");
    }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw Error(ErrorCode::Io, "write failed");
    }

    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw Error(ErrorCode::Io, "cannot open for reading: " + path);
    }

    void expect_header(PayloadKind kind) {
        char magic[8];
        raw(magic, sizeof(magic));
        if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
            throw Error(ErrorCode::VersionMismatch, "bad magic in " + path_);
        std::uint32_t version = u32();
        if (version != kFormatVersion)
            throw Error(ErrorCode::VersionMismatch,
                        "unsupported format version " + std::to_string(version) + " in " + path_);
        std::uint32_t got = u32();
        if (got != static_cast<std::uint32_t>(kind))
            throw Error(ErrorCode::VersionMismatch, "wrong payload kind in " + path_);
    }

    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof(v));
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, sizeof(v));
        return v;
    }
    float f32() {
        float v;
        raw(&v, sizeof(v));
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof(v));
        return v;
    }

    std::string str() {
        std::uint64_t n = u64();
        check_len(n);
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

    std::vector<float> f32_array() {
        std::uint64_t n = u64();
        check_len(n * sizeof(float));
        std::vector<float> v(n);
        raw(v.data(), n * sizeof(float));
        return v;
    }

    std::vector<double> f64_array() {
        std::uint64_t n = u64();
        check_len(n * sizeof(double));
        std::vector<double> v(n);
        raw(v.data(), n * sizeof(double));
        return v;
    }

private:
    // Guards against truncated or corrupt length fields so a bad file fails
    // with a typed error instead of a bad_alloc.
    void check_len(std::uint64_t n) {
        if (n > (1ull << 33))
            throw Error(ErrorCode::VersionMismatch, "corrupt length field in " + path_);
    }

    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw Error(ErrorCode::VersionMismatch, "truncated file: " + path_);
    }

    std::ifstream in_;
    std::string path_;
};

}  // namespace groupsearch::binio
