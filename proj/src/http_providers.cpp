#include "dreamforge/http_providers.hpp"

#include "httplib.h"

#include <atomic>
#include <thread>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"
#include "dreamforge/stub_providers.hpp"

namespace dreamforge {

namespace wire {

Json llm_request(const std::string& prompt, std::uint64_t seed) { return Json{{"prompt", prompt}, {"seed", seed}}; }

std::string llm_response(const Json& body) { return body.at("text").get<std::string>(); }

Json layout2image_request(const Layout& layout, std::uint64_t seed) { return Json{{"layout", layout}, {"seed", seed}}; }

GeneratedImage layout2image_response(const Json& body, const Layout& layout) {
    GeneratedImage out;
    out.image.uri = body.at("image_uri").get<std::string>();
    out.image.width = body.value("width", layout.canvas_width);
    out.image.height = body.value("height", layout.canvas_height);
    if (auto it = body.find("regions"); it != body.end()) {
        for (const auto& r : *it) {
            out.regions.push_back({r.at("bbox").get<BBox>(), r.at("mean_rgb").get<std::array<double, 3>>()});
        }
    }
    return out;
}

Json maskgen_request(const ImageHandle& image, const BBox& box) {
    return Json{{"image_uri", image.uri}, {"width", image.width}, {"height", image.height}, {"bbox", box}};
}

std::vector<MaskCandidate> maskgen_response(const Json& body) {
    std::vector<MaskCandidate> out;
    for (const auto& c : body.at("candidates")) {
        Mask m(c.at("width").get<int>(), c.at("height").get<int>(), c.at("runs").get<std::vector<std::uint32_t>>());
        const auto area = m.area();
        out.push_back({std::move(m), c.at("confidence_uri").get<std::string>(), area});
    }
    return out;
}

Json score_request(const ImageHandle& image, const BBox& box, const std::string& class_name) {
    return Json{{"image_uri", image.uri}, {"bbox", box}, {"class_name", class_name}};
}

double score_response(const Json& body) { return body.at("score").get<double>(); }

Json embed_request(const std::string& text) { return Json{{"text", text}}; }

std::vector<double> embed_response(const Json& body) { return body.at("vector").get<std::vector<double>>(); }

Json confidence_response(const ConfidenceMap& map) {
    return Json{{"width", map.width}, {"height", map.height}, {"values", map.values}};
}

ConfidenceMap confidence_from(const Json& body) {
    ConfidenceMap m{body.at("width").get<int>(), body.at("height").get<int>(),
                    body.at("values").get<std::vector<double>>()};
    if (m.values.size() != static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height)) {
        throw ProviderError("confidence map size mismatch", false);
    }
    return m;
}

}  // namespace wire

namespace {

Json parse_body(const httplib::Result& res, const std::string& what) {
    if (!res) {
        throw ProviderError(what + ": transport error " + httplib::to_string(res.error()), true);
    }
    if (res->status == 429 || res->status >= 500) {
        throw ProviderError(what + ": HTTP " + std::to_string(res->status), true);
    }
    if (res->status != 200) {
        throw ProviderError(what + ": HTTP " + std::to_string(res->status), false);
    }
    try {
        return Json::parse(res->body);
    } catch (const Json::exception& e) {
        throw ProviderError(what + ": malformed response: " + e.what(), false);
    }
}

template <class Fn>
auto decode(const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        throw ProviderError(what + ": unexpected response shape: " + e.what(), false);
    } catch (const MalformedMask& e) {
        throw ProviderError(what + ": " + e.what(), false);
    }
}

void configure(httplib::Client& cli, double timeout_s) {
    const auto sec = static_cast<time_t>(timeout_s);
    const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
}

}  // namespace

HttpProvider::HttpProvider(ProviderEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    if (endpoint_.is_stub()) throw ConfigError("HttpProvider needs a real base_url");
    while (!endpoint_.base_url.empty() && endpoint_.base_url.back() == '/') endpoint_.base_url.pop_back();
}

Json HttpProvider::post(const std::string& path, const Json& body) const {
    httplib::Client cli(endpoint_.base_url);
    configure(cli, endpoint_.timeout_s);
    const std::string payload = body.dump();
    httplib::Headers headers{{"Idempotency-Key", hex64(fnv1a(payload, fnv1a(path)))}};
    return parse_body(cli.Post(path, headers, payload, "application/json"), "POST " + path);
}

Json HttpProvider::get(const std::string& base, const std::string& path) const {
    httplib::Client cli(base);
    configure(cli, endpoint_.timeout_s);
    return parse_body(cli.Get(path), "GET " + path);
}

std::string HttpProvider::complete(const std::string& prompt, std::uint64_t seed) {
    return decode("llm", [&] { return wire::llm_response(post("/v1/llm", wire::llm_request(prompt, seed))); });
}

GeneratedImage HttpProvider::generate(const Layout& layout, std::uint64_t seed) {
    return decode("layout2image", [&] {
        return wire::layout2image_response(post("/v1/layout2image", wire::layout2image_request(layout, seed)), layout);
    });
}

std::vector<MaskCandidate> HttpProvider::propose(const ImageHandle& image, const BBox& box) {
    return decode("maskgen", [&] { return wire::maskgen_response(post("/v1/maskgen", wire::maskgen_request(image, box))); });
}

ConfidenceMap HttpProvider::fetch_confidence(const std::string& confidence_uri) {
    std::string base = endpoint_.base_url;
    std::string path = confidence_uri;
    if (confidence_uri.rfind("http://", 0) == 0 || confidence_uri.rfind("https://", 0) == 0) {
        const auto scheme_end = confidence_uri.find("://") + 3;
        const auto slash = confidence_uri.find('/', scheme_end);
        base = confidence_uri.substr(0, slash);
        path = slash == std::string::npos ? "/" : confidence_uri.substr(slash);
    } else if (confidence_uri.empty() || confidence_uri.front() != '/') {
        throw ProviderError("unsupported confidence uri: " + confidence_uri, false);
    }
    return decode("confidence", [&] { return wire::confidence_from(get(base, path)); });
}

double HttpProvider::score(const ImageHandle& image, const BBox& box, const std::string& class_name) {
    return decode("score",
                  [&] { return wire::score_response(post("/v1/score", wire::score_request(image, box, class_name))); });
}

std::vector<double> HttpProvider::embed(const std::string& text) {
    return decode("embed", [&] { return wire::embed_response(post("/v1/embed", wire::embed_request(text))); });
}

ProviderSet make_providers(const std::array<ProviderEndpoint, 5>& endpoints, std::uint64_t embed_seed) {
    ProviderSet set = make_stub_providers(embed_seed);
    set.endpoints = endpoints;
    for (const auto& ep : endpoints) {
        ep.validate();
        if (ep.is_stub()) continue;
        auto http = std::make_shared<HttpProvider>(ep);
        switch (ep.kind) {
            case ProviderKind::llm: set.llm = http; break;
            case ProviderKind::layout2image: set.images = http; break;
            case ProviderKind::maskgen: set.masks = http; break;
            case ProviderKind::scorer: set.scorer = http; break;
            case ProviderKind::embed: set.embedder = http; break;
        }
    }
    return set;
}

struct StubBackendServer::Impl {
    httplib::Server server;
    std::thread thread;
    std::atomic<int> fail_budget{0};
    std::atomic<int> served{0};
    std::string base_url;
    StubLlm llm;
    StubImageGenerator images;
    StubMaskGenerator masks;
    StubScorer scorer;
    StubEmbedder embedder;

    template <class Fn>
    void handle(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
        ++served;
        if (fail_budget.load() > 0 && fail_budget.fetch_sub(1) > 0) {
            res.status = 503;
            return;
        }
        try {
            const Json body = req.body.empty() ? Json::object() : Json::parse(req.body);
            res.set_content(fn(body).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        }
    }
};

StubBackendServer::StubBackendServer() : impl_(std::make_unique<Impl>()) {
    auto& s = impl_->server;
    Impl* impl = impl_.get();
    s.Post("/v1/llm", [impl](const httplib::Request& req, httplib::Response& res) {
        impl->handle(req, res, [&](const Json& b) {
            return Json{{"text", impl->llm.complete(b.at("prompt").get<std::string>(), b.at("seed").get<std::uint64_t>())}};
        });
    });
    s.Post("/v1/layout2image", [impl](const httplib::Request& req, httplib::Response& res) {
        impl->handle(req, res, [&](const Json& b) {
            const auto out = impl->images.generate(b.at("layout").get<Layout>(), b.at("seed").get<std::uint64_t>());
            Json regions = Json::array();
            for (const auto& r : out.regions) regions.push_back(Json{{"bbox", r.box}, {"mean_rgb", r.mean_rgb}});
            return Json{{"image_uri", out.image.uri},
                        {"width", out.image.width},
                        {"height", out.image.height},
                        {"regions", regions}};
        });
    });
    s.Post("/v1/maskgen", [impl](const httplib::Request& req, httplib::Response& res) {
        impl->handle(req, res, [&](const Json& b) {
            ImageHandle image{b.at("image_uri").get<std::string>(), b.at("width").get<int>(), b.at("height").get<int>()};
            Json cands = Json::array();
            for (const auto& c : impl->masks.propose(image, b.at("bbox").get<BBox>())) {
                std::string hex;
                for (unsigned char ch : c.confidence_uri) hex += hex64(ch).substr(14);
                cands.push_back(Json{{"runs", c.mask.runs()},
                                     {"width", c.mask.width()},
                                     {"height", c.mask.height()},
                                     {"confidence_uri", impl->base_url + "/v1/confidence/" + hex}});
            }
            return Json{{"candidates", cands}};
        });
    });
    s.Get(R"(/v1/confidence/([0-9a-f]+))", [impl](const httplib::Request& req, httplib::Response& res) {
        impl->handle(req, res, [&](const Json&) {
            const std::string hex = req.matches[1];
            std::string uri;
            for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
                uri.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
            }
            return wire::confidence_response(impl->masks.fetch_confidence(uri));
        });
    });
    s.Post("/v1/score", [impl](const httplib::Request& req, httplib::Response& res) {
        impl->handle(req, res, [&](const Json& b) {
            ImageHandle image{b.at("image_uri").get<std::string>(), 0, 0};
            return Json{{"score", impl->scorer.score(image, b.at("bbox").get<BBox>(),
                                                     b.at("class_name").get<std::string>())}};
        });
    });
    s.Post("/v1/embed", [impl](const httplib::Request& req, httplib::Response& res) {
        impl->handle(req, res,
                     [&](const Json& b) { return Json{{"vector", impl->embedder.embed(b.at("text").get<std::string>())}}; });
    });
}

StubBackendServer::~StubBackendServer() { stop(); }

std::string StubBackendServer::start() {
    const int port = impl_->server.bind_to_any_port("127.0.0.1");
    if (port <= 0) throw ProviderError("stub backend could not bind", false);
    impl_->base_url = "http://127.0.0.1:" + std::to_string(port);
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->base_url;
}

void StubBackendServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void StubBackendServer::fail_next(int n) { impl_->fail_budget = n; }

int StubBackendServer::requests_served() const { return impl_->served.load(); }

}  // namespace dreamforge
