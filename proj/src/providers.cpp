#include "dreamforge/providers.hpp"

#include <cmath>
#include <thread>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"

namespace dreamforge {

std::string_view to_string(ProviderKind k) noexcept {
    switch (k) {
        case ProviderKind::llm: return "llm";
        case ProviderKind::layout2image: return "layout2image";
        case ProviderKind::maskgen: return "maskgen";
        case ProviderKind::scorer: return "score";
        case ProviderKind::embed: return "embed";
    }
    return "unknown";
}

ProviderKind parse_provider_kind(std::string_view s) {
    if (s == "llm") return ProviderKind::llm;
    if (s == "layout2image") return ProviderKind::layout2image;
    if (s == "maskgen") return ProviderKind::maskgen;
    if (s == "score" || s == "scorer") return ProviderKind::scorer;
    if (s == "embed") return ProviderKind::embed;
    throw ConfigError("unknown provider kind: " + std::string(s));
}

void ProviderEndpoint::validate() const {
    if (!(timeout_s > 0.0)) throw ConfigError(std::string(to_string(kind)) + ": timeout must be > 0");
    if (retries < 0) throw ConfigError(std::string(to_string(kind)) + ": retries must be >= 0");
}

void to_json(Json& j, const CallRecord& r) {
    j = Json{{"kind", std::string(to_string(r.kind))},
             {"request_hash", r.request_hash},
             {"latency_ms", r.latency_ms},
             {"attempts", r.attempts},
             {"outcome", r.outcome}};
}

void from_json(const Json& j, CallRecord& r) {
    r.kind = parse_provider_kind(j.at("kind").get<std::string>());
    r.request_hash = j.at("request_hash").get<std::string>();
    r.latency_ms = j.at("latency_ms").get<double>();
    r.attempts = j.at("attempts").get<int>();
    r.outcome = j.at("outcome").get<std::string>();
}

std::chrono::milliseconds retry_delay(int attempt, std::uint64_t request_hash, std::chrono::milliseconds base) {
    const double jitter = 0.5 + unit_interval(hash_combine(request_hash, static_cast<std::uint64_t>(attempt)));
    const double ms = static_cast<double>(base.count()) * std::ldexp(1.0, std::max(0, attempt - 1)) * jitter;
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

template <class Fn>
auto ProviderSession::call(ProviderKind kind, bool in_process, const std::string& request, Fn&& fn) {
    const std::uint64_t h = fnv1a(request, fnv1a(to_string(kind)));
    const int retries = providers_->endpoint(kind).retries;
    const auto start = std::chrono::steady_clock::now();
    CallRecord rec;
    rec.kind = kind;
    rec.request_hash = hex64(h);
    auto finish = [&](int attempts, std::string outcome) {
        rec.attempts = attempts;
        rec.outcome = std::move(outcome);
        if (!in_process) {
            rec.latency_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        log_.push_back(rec);
    };
    for (int attempt = 1;; ++attempt) {
        try {
            auto result = fn();
            finish(attempt, "ok");
            return result;
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt > retries) {
                finish(attempt, std::string("failed: ") + e.what());
                throw;
            }
            const auto delay = retry_delay(attempt, h);
            if (sleeper_) {
                sleeper_(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
        }
    }
}

std::string ProviderSession::llm_complete(const std::string& prompt, std::uint64_t seed) {
    if (prompt.empty()) throw ContractViolation("llm_complete: empty prompt");
    auto& p = *providers_->llm;
    return call(ProviderKind::llm, p.in_process(), prompt + '\x1f' + std::to_string(seed),
                [&] { return p.complete(prompt, seed); });
}

GeneratedImage ProviderSession::generate_image(const Layout& layout, std::uint64_t seed) {
    auto& p = *providers_->images;
    Json req{{"layout", layout}, {"seed", seed}};
    return call(ProviderKind::layout2image, p.in_process(), canonical_dump(req),
                [&] { return p.generate(layout, seed); });
}

std::vector<MaskCandidate> ProviderSession::propose_masks(const ImageHandle& image, const BBox& box) {
    if (!box.fits(image.width, image.height)) throw ContractViolation("propose_masks: box outside image");
    auto& p = *providers_->masks;
    Json req{{"image_uri", image.uri}, {"bbox", box}};
    return call(ProviderKind::maskgen, p.in_process(), canonical_dump(req), [&] { return p.propose(image, box); });
}

ConfidenceMap ProviderSession::fetch_confidence(const std::string& uri) {
    auto& p = *providers_->masks;
    return call(ProviderKind::maskgen, p.in_process(), "confidence:" + uri, [&] { return p.fetch_confidence(uri); });
}

double ProviderSession::score_crop(const ImageHandle& image, const BBox& box, const std::string& class_name) {
    if (!box.fits(image.width, image.height)) throw ContractViolation("score_crop: box outside image");
    auto& p = *providers_->scorer;
    Json req{{"image_uri", image.uri}, {"bbox", box}, {"class_name", class_name}};
    const double s =
        call(ProviderKind::scorer, p.in_process(), canonical_dump(req), [&] { return p.score(image, box, class_name); });
    return std::clamp(s, 0.0, 1.0);
}

std::vector<double> ProviderSession::embed_text(const std::string& text) {
    if (text.empty()) throw ContractViolation("embed_text: empty text");
    auto& p = *providers_->embedder;
    return call(ProviderKind::embed, p.in_process(), text, [&] { return p.embed(text); });
}

}  // namespace dreamforge
