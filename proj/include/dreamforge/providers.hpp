#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dreamforge/dataset.hpp"
#include "dreamforge/json_io.hpp"
#include "dreamforge/layout.hpp"

namespace dreamforge {

enum class ProviderKind { llm, layout2image, maskgen, scorer, embed };

std::string_view to_string(ProviderKind k) noexcept;
ProviderKind parse_provider_kind(std::string_view s);

/// Where a provider lives. A base_url of "stub" (or empty) selects the in-process stub.
struct ProviderEndpoint {
    ProviderKind kind = ProviderKind::llm;
    std::string base_url = "stub";
    double timeout_s = 60.0;
    int retries = 3;

    bool is_stub() const noexcept { return base_url.empty() || base_url == "stub"; }
    /// Throws ConfigError when timeout <= 0 or retries < 0.
    void validate() const;
};

struct ImageHandle {
    std::string uri;
    int width = 0;
    int height = 0;

    bool operator==(const ImageHandle&) const = default;
};

struct RegionStats {
    BBox box;
    std::array<double, 3> mean_rgb{};

    bool operator==(const RegionStats&) const = default;
};

struct GeneratedImage {
    ImageHandle image;
    std::vector<RegionStats> regions;
};

/// A class-agnostic mask proposal. Its confidence map lives behind confidence_uri
/// and is loaded with MaskGenerator::fetch_confidence.
struct MaskCandidate {
    Mask mask;
    std::string confidence_uri;
    std::int64_t area = 0;

    bool operator==(const MaskCandidate&) const = default;
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string complete(const std::string& prompt, std::uint64_t seed) = 0;
    /// In-process providers report zero latency so manifests stay byte-identical.
    virtual bool in_process() const noexcept { return false; }
};

class ImageGenerator {
public:
    virtual ~ImageGenerator() = default;
    virtual GeneratedImage generate(const Layout& layout, std::uint64_t seed) = 0;
    virtual bool in_process() const noexcept { return false; }
};

class MaskGenerator {
public:
    virtual ~MaskGenerator() = default;
    virtual std::vector<MaskCandidate> propose(const ImageHandle& image, const BBox& box) = 0;
    /// Confidence map at the resolution of the box the candidate was proposed for.
    virtual ConfidenceMap fetch_confidence(const std::string& confidence_uri) = 0;
    virtual bool in_process() const noexcept { return false; }
};

class CropScorer {
public:
    virtual ~CropScorer() = default;
    /// Image-text similarity of the crop at `box` against `class_name`, in [0, 1].
    virtual double score(const ImageHandle& image, const BBox& box, const std::string& class_name) = 0;
    virtual bool in_process() const noexcept { return false; }
};

class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    /// Unit-norm embedding.
    virtual std::vector<double> embed(const std::string& text) = 0;
    virtual bool in_process() const noexcept { return false; }
};

/// The five providers a pipeline run talks to, plus their endpoint settings.
struct ProviderSet {
    std::shared_ptr<LlmProvider> llm;
    std::shared_ptr<ImageGenerator> images;
    std::shared_ptr<MaskGenerator> masks;
    std::shared_ptr<CropScorer> scorer;
    std::shared_ptr<TextEmbedder> embedder;
    std::array<ProviderEndpoint, 5> endpoints{
        ProviderEndpoint{ProviderKind::llm},    ProviderEndpoint{ProviderKind::layout2image},
        ProviderEndpoint{ProviderKind::maskgen}, ProviderEndpoint{ProviderKind::scorer},
        ProviderEndpoint{ProviderKind::embed}};

    const ProviderEndpoint& endpoint(ProviderKind k) const { return endpoints[static_cast<std::size_t>(k)]; }
};

/// One provider call as recorded in the manifest.
struct CallRecord {
    ProviderKind kind = ProviderKind::llm;
    std::string request_hash;
    double latency_ms = 0.0;
    int attempts = 1;
    std::string outcome;

    bool operator==(const CallRecord&) const = default;
};

void to_json(Json& j, const CallRecord& r);
void from_json(const Json& j, CallRecord& r);

/// Backoff before retry `attempt` (1-based): base * 2^(attempt-1) scaled by a
/// jitter factor in [0.5, 1.5) derived from the request hash.
std::chrono::milliseconds retry_delay(int attempt, std::uint64_t request_hash,
                                      std::chrono::milliseconds base = std::chrono::milliseconds(200));

/// Per-worker view over a ProviderSet that applies the retry policy and records
/// every call. Not thread-safe; give each worker its own session and merge the
/// logs in a fixed order afterwards.
class ProviderSession {
public:
    explicit ProviderSession(const ProviderSet& providers) : providers_(&providers) {}

    std::string llm_complete(const std::string& prompt, std::uint64_t seed);
    GeneratedImage generate_image(const Layout& layout, std::uint64_t seed);
    std::vector<MaskCandidate> propose_masks(const ImageHandle& image, const BBox& box);
    ConfidenceMap fetch_confidence(const std::string& uri);
    double score_crop(const ImageHandle& image, const BBox& box, const std::string& class_name);
    std::vector<double> embed_text(const std::string& text);

    const std::vector<CallRecord>& log() const noexcept { return log_; }
    std::vector<CallRecord> take_log() { return std::move(log_); }

    /// Overrides the sleep used between retries (tests use a no-op).
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

private:
    template <class Fn>
    auto call(ProviderKind kind, bool in_process, const std::string& request, Fn&& fn);

    const ProviderSet* providers_;
    std::vector<CallRecord> log_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
};

}  // namespace dreamforge
