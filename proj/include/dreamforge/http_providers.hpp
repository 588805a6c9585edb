#pragma once

#include <memory>
#include <string>

#include "dreamforge/providers.hpp"

namespace dreamforge {

// JSON-over-HTTP wire format, one endpoint per provider kind:
//   POST /v1/llm          {prompt, seed}                      -> {text}
//   POST /v1/layout2image {layout, seed}                      -> {image_uri, width, height, regions?}
//   POST /v1/maskgen      {image_uri, width, height, bbox}    -> {candidates: [{runs, width, height, confidence_uri}]}
//   POST /v1/score        {image_uri, bbox, class_name}       -> {score}
//   POST /v1/embed        {text}                              -> {vector}
//   GET  <confidence_uri>                                     -> {width, height, values}
// Image pixels never travel inline; they are referenced by URI.
namespace wire {

Json llm_request(const std::string& prompt, std::uint64_t seed);
std::string llm_response(const Json& body);

Json layout2image_request(const Layout& layout, std::uint64_t seed);
GeneratedImage layout2image_response(const Json& body, const Layout& layout);

Json maskgen_request(const ImageHandle& image, const BBox& box);
std::vector<MaskCandidate> maskgen_response(const Json& body);

Json score_request(const ImageHandle& image, const BBox& box, const std::string& class_name);
double score_response(const Json& body);

Json embed_request(const std::string& text);
std::vector<double> embed_response(const Json& body);

Json confidence_response(const ConfidenceMap& map);
ConfidenceMap confidence_from(const Json& body);

}  // namespace wire

/// One remote backend speaking the wire format above. A single instance may
/// serve several kinds when they share a base URL. Each call makes exactly one
/// attempt; retries belong to ProviderSession. Thread-safe: every call opens
/// its own connection.
class HttpProvider : public LlmProvider,
                     public ImageGenerator,
                     public MaskGenerator,
                     public CropScorer,
                     public TextEmbedder {
public:
    explicit HttpProvider(ProviderEndpoint endpoint);

    std::string complete(const std::string& prompt, std::uint64_t seed) override;
    GeneratedImage generate(const Layout& layout, std::uint64_t seed) override;
    std::vector<MaskCandidate> propose(const ImageHandle& image, const BBox& box) override;
    ConfidenceMap fetch_confidence(const std::string& confidence_uri) override;
    double score(const ImageHandle& image, const BBox& box, const std::string& class_name) override;
    std::vector<double> embed(const std::string& text) override;

    bool in_process() const noexcept override { return false; }

    const ProviderEndpoint& endpoint() const noexcept { return endpoint_; }

private:
    Json post(const std::string& path, const Json& body) const;
    Json get(const std::string& base, const std::string& path) const;

    ProviderEndpoint endpoint_;
};

/// Builds stubs for "stub" endpoints and HttpProvider clients for the rest.
ProviderSet make_providers(const std::array<ProviderEndpoint, 5>& endpoints, std::uint64_t embed_seed = 0);

/// Local HTTP server that answers the wire format with the in-process stubs.
/// Used by tests and for trying the remote code path without a GPU backend.
class StubBackendServer {
public:
    StubBackendServer();
    ~StubBackendServer();
    StubBackendServer(const StubBackendServer&) = delete;
    StubBackendServer& operator=(const StubBackendServer&) = delete;

    /// Binds to 127.0.0.1 on an ephemeral port and starts serving; returns the base URL.
    std::string start();
    void stop();

    /// The next `n` requests are answered with HTTP 503 (for retry tests).
    void fail_next(int n);
    int requests_served() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace dreamforge
