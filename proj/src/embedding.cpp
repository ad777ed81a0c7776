#include "prefbench/embedding.hpp"

#include "prefbench/error.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>
#include <cstdint>

namespace prefbench {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

BagOfWordsEmbedder::BagOfWordsEmbedder(std::size_t dims) : dims_(dims) {
    if (dims_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string BagOfWordsEmbedder::identity() const { return fmt::format("bow-hash({})", dims_); }

std::vector<std::string> BagOfWordsEmbedder::tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<double> BagOfWordsEmbedder::embed(const std::string& text) {
    std::vector<double> v(dims_, 0.0);
    for (const auto& tok : tokenize(text)) v[fnv1a(tok) % dims_] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw BackendError("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace prefbench
