#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "spritecheck/image.hpp"
#include "spritecheck/oracle.hpp"

namespace spritecheck {

enum class MetricKind { PCT, MSE, SSIM, ESIM };
enum class Polarity { higher_is_similar, lower_is_similar };

inline constexpr MetricKind kAllMetrics[] = {MetricKind::PCT, MetricKind::MSE, MetricKind::SSIM, MetricKind::ESIM};

std::string to_string(MetricKind kind);
MetricKind metric_from_string(const std::string& name);
Polarity polarity(MetricKind kind);

struct SsimParams {
    int window = 7;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 255.0;
};

// Image -> feature vector. Implementations must be deterministic.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual int dimension() const = 0;
    [[nodiscard]] virtual std::vector<double> embed(const Bitmap& image) const = 0;
    // False if embed() must not be called from several threads at once.
    [[nodiscard]] virtual bool concurrent_safe() const { return true; }
};

// Built-in 256-d descriptor: three 8x8 grids of mean R, then G, then B (192)
// followed by an 8x8 grid of mean gradient magnitude (64), all in [0, 255].
class DefaultEmbedding final : public EmbeddingProvider {
public:
    [[nodiscard]] std::string name() const override { return "default-grid-256"; }
    [[nodiscard]] int dimension() const override { return 256; }
    [[nodiscard]] std::vector<double> embed(const Bitmap& image) const override;
};

// Runs an external command per image. The command reads one PNG from stdin
// and prints the vector length followed by that many reals on stdout.
class ExternalEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit ExternalEmbeddingProvider(std::string command);
    [[nodiscard]] std::string name() const override;
    [[nodiscard]] int dimension() const override;
    [[nodiscard]] std::vector<double> embed(const Bitmap& image) const override;

private:
    std::string command_;
    mutable std::mutex mutex_;
    mutable int dimension_ = 0;
};

// Environment variable naming an external provider command for ESIM.
inline constexpr const char* kProviderEnv = "SPRITECHECK_EMBEDDING_PROVIDER";

// Provider from kProviderEnv if set, otherwise the built-in default.
std::shared_ptr<const EmbeddingProvider> provider_from_environment();
const EmbeddingProvider& default_provider();

double pct(const Bitmap& a, const Bitmap& b);
double mse(const Bitmap& a, const Bitmap& b);
double ssim(const Bitmap& a, const Bitmap& b, const SsimParams& params = {});
double cosine_similarity(std::span<const double> u, std::span<const double> v);
double esim(const Bitmap& a, const Bitmap& b, const EmbeddingProvider& provider);
std::vector<double> default_embedding(const Bitmap& image);

struct MetricConfig {
    SsimParams ssim;
    // Null selects the built-in default embedding.
    std::shared_ptr<const EmbeddingProvider> provider;
};

struct MetricScore {
    std::string node_id;
    MetricKind kind = MetricKind::PCT;
    double value = 0.0;

    friend bool operator==(const MetricScore&, const MetricScore&) = default;
};

double compute_metric(const Bitmap& a, const Bitmap& b, MetricKind kind, const MetricConfig& config = {});
MetricScore score(const ImagePair& pair, MetricKind kind, const MetricConfig& config = {});

}  // namespace spritecheck
