#pragma once

// Deterministic in-process providers. Every output is a pure function of the
// inputs and the construction seed; image and confidence URIs are
// self-describing, so any process can resolve them without shared state.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dreamforge/hashing.hpp"
#include "dreamforge/providers.hpp"

namespace dreamforge {

/// Small counter-based generator over splitmix64; identical on every platform.
class HashRng {
public:
    explicit HashRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }
    double uniform() noexcept { return unit_interval(next()); }
    /// Box-Muller standard normal.
    double gaussian() noexcept;
    std::size_t below(std::size_t n) noexcept { return static_cast<std::size_t>(next() % n); }

private:
    std::uint64_t state_;
};

/// Scripted LLM that understands the versioned prompt templates.
///
/// associate: emits a class's related-noun pool (each noun with probability
///   0.6 per seed), two random nouns, and occasionally a non-noun, a synonym of
///   the class, or the class itself.
/// describe:  a one-paragraph placement description.
/// induce:    a grid-placed, non-overlapping JSON layout; about 12% of calls
///   return truncated JSON and 4% add a class that was not requested.
class StubLlm : public LlmProvider {
public:
    std::string complete(const std::string& prompt, std::uint64_t seed) override;
    bool in_process() const noexcept override { return true; }

    /// Related-noun pool the stub draws from for a class (canonical names).
    static std::vector<std::string> related_pool(const std::string& class_name);
    /// Non-noun words the stub may inject into association replies.
    static const std::vector<std::string>& injected_non_nouns();
};

/// Parsed form of a stub image URI.
struct StubCanvas {
    int width = 0;
    int height = 0;
    std::uint64_t seed = 0;
    struct Patch {
        std::int64_t category_id = 0;
        BBox box;
    };
    std::vector<Patch> patches;

    /// Index of the patch painted last over (x, y), or -1 for background.
    int top_patch_at(int x, int y) const noexcept;
    std::array<std::uint8_t, 3> color_at(int x, int y) const noexcept;
};

std::array<std::uint8_t, 3> stub_class_color(std::int64_t category_id) noexcept;
std::string stub_image_uri(const StubCanvas& canvas);
/// Throws ProviderError (non-retryable) for URIs the stub did not produce.
StubCanvas parse_stub_image_uri(const std::string& uri);
/// Row-major RGB bytes of the canvas.
std::vector<std::uint8_t> render_stub_image(const StubCanvas& canvas);

/// Paints every layout box with a solid class-keyed patch over a seeded background.
class StubImageGenerator : public ImageGenerator {
public:
    GeneratedImage generate(const Layout& layout, std::uint64_t seed) override;
    bool in_process() const noexcept override { return true; }
};

/// Returns the visible part of the painted patch under the box, then a
/// half-size centered distractor. Confidence levels vary per object.
class StubMaskGenerator : public MaskGenerator {
public:
    std::vector<MaskCandidate> propose(const ImageHandle& image, const BBox& box) override;
    ConfidenceMap fetch_confidence(const std::string& confidence_uri) override;
    bool in_process() const noexcept override { return true; }
};

/// Uniform [0, 1) score keyed by hash(image, box, class name).
class StubScorer : public CropScorer {
public:
    double score(const ImageHandle& image, const BBox& box, const std::string& class_name) override;
    bool in_process() const noexcept override { return true; }
};

/// Hash-seeded directions on the unit sphere. Names in one synonym group share
/// a base direction and differ by a perpendicular offset of norm 0.1, so any
/// two members have cosine >= 0.98.
class StubEmbedder : public TextEmbedder {
public:
    explicit StubEmbedder(std::uint64_t seed = 0, std::size_t dimension = 64) : seed_(seed), dimension_(dimension) {}

    std::vector<double> embed(const std::string& text) override;
    bool in_process() const noexcept override { return true; }

    static const std::vector<std::vector<std::string>>& synonym_groups();

private:
    std::uint64_t seed_;
    std::size_t dimension_;
};

/// ProviderSet where every provider is the in-process stub.
ProviderSet make_stub_providers(std::uint64_t embed_seed = 0);

}  // namespace dreamforge
