#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace prefbench {

// Text -> fixed-length vector. Throws BackendError on failure.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
    virtual std::string identity() const = 0;
};

// Lowercased alphanumeric tokens hashed into `dims` buckets, L2-normalized.
// Pure and reentrant.
class BagOfWordsEmbedder : public Embedder {
public:
    explicit BagOfWordsEmbedder(std::size_t dims = 4096);

    std::vector<double> embed(const std::string& text) override;
    std::string identity() const override;

    static std::vector<std::string> tokenize(const std::string& text);

private:
    std::size_t dims_;
};

// 0 when either vector is all zeros.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace prefbench
