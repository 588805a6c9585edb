#include "doctest.h"

#include "dreamforge/errors.hpp"
#include "dreamforge/http_providers.hpp"
#include "dreamforge/pipeline.hpp"
#include "dreamforge/prompts.hpp"
#include "dreamforge/stub_providers.hpp"
#include "support.hpp"

using namespace dreamforge;

namespace {

std::array<ProviderEndpoint, 5> remote(const std::string& url, int retries = 3) {
    std::array<ProviderEndpoint, 5> eps{ProviderEndpoint{ProviderKind::llm}, ProviderEndpoint{ProviderKind::layout2image},
                                        ProviderEndpoint{ProviderKind::maskgen}, ProviderEndpoint{ProviderKind::scorer},
                                        ProviderEndpoint{ProviderKind::embed}};
    for (auto& e : eps) {
        e.base_url = url;
        e.timeout_s = 5;
        e.retries = retries;
    }
    return eps;
}

Layout layout() {
    Layout l;
    l.canvas_width = 64;
    l.canvas_height = 64;
    l.items.push_back(LayoutItem{CategoryId{0}, "dog", BBox{2, 3, 20, 30}});
    l.items.push_back(LayoutItem{CategoryId{1}, "cat", BBox{30, 30, 20, 20}});
    l.layout_id = layout_content_id(l);
    return l;
}

}  // namespace

TEST_CASE("wire helpers round-trip") {
    CHECK(wire::llm_response(Json{{"text", "hello"}}) == "hello");
    CHECK(wire::score_response(Json{{"score", 0.25}}) == 0.25);
    CHECK(wire::embed_response(Json{{"vector", {0.6, 0.8}}}) == std::vector<double>{0.6, 0.8});
    const ConfidenceMap m{2, 1, {0.5, 0.75}};
    CHECK(wire::confidence_from(wire::confidence_response(m)) == m);
    CHECK_THROWS_AS(wire::confidence_from(Json{{"width", 2}, {"height", 2}, {"values", {0.1}}}), ProviderError);
    CHECK(wire::llm_request("p", 7).at("seed") == 7);
}

TEST_CASE("remote providers answer like the in-process stubs") {
    StubBackendServer server;
    const std::string url = server.start();
    const ProviderSet http = make_providers(remote(url));
    const ProviderSet local = make_stub_providers();

    const std::string prompt = prompts::associate("dog");
    CHECK(http.llm->complete(prompt, 4) == local.llm->complete(prompt, 4));
    const auto g_http = http.images->generate(layout(), 3);
    const auto g_local = local.images->generate(layout(), 3);
    CHECK(g_http.image == g_local.image);
    const BBox box = layout().items[0].box;
    const auto c_http = http.masks->propose(g_http.image, box);
    const auto c_local = local.masks->propose(g_local.image, box);
    REQUIRE(c_http.size() == c_local.size());
    for (std::size_t i = 0; i < c_http.size(); ++i) {
        CHECK(c_http[i].mask == c_local[i].mask);
        CHECK(http.masks->fetch_confidence(c_http[i].confidence_uri) ==
              local.masks->fetch_confidence(c_local[i].confidence_uri));
    }
    CHECK(http.scorer->score(g_http.image, box, "dog") == local.scorer->score(g_local.image, box, "dog"));
    CHECK(http.embedder->embed("sofa") == local.embedder->embed("sofa"));
    CHECK(server.requests_served() >= 6);
    server.stop();
}

TEST_CASE("transient 503s are retried by the session") {
    StubBackendServer server;
    const std::string url = server.start();
    const ProviderSet http = make_providers(remote(url, 3));
    ProviderSession session(http);
    session.set_sleeper([](std::chrono::milliseconds) {});
    server.fail_next(2);
    CHECK(session.embed_text("dog").size() == 64);
    REQUIRE(session.log().size() == 1);
    CHECK(session.log()[0].attempts == 3);
    CHECK(session.log()[0].latency_ms >= 0.0);

    server.fail_next(10);
    CHECK_THROWS_AS(session.embed_text("cat"), ProviderError);
    server.stop();
}

TEST_CASE("an unreachable backend is a retryable provider error") {
    const ProviderSet http = make_providers(remote("http://127.0.0.1:9", 0));
    try {
        http.llm->complete("x", 1);
        FAIL("expected a provider error");
    } catch (const ProviderError& e) {
        CHECK(e.retryable());
    }
}

TEST_CASE("a small pipeline runs end to end over HTTP") {
    StubBackendServer server;
    const std::string url = server.start();
    auto cfg = testing::small_config(testing::scratch_dir("http_run"), 6);
    cfg.providers = remote(url);
    const auto http_run = run_synthesis(cfg);
    auto cfg_local = testing::small_config(testing::scratch_dir("http_run_local"), 6);
    const auto local_run = run_synthesis(cfg_local);
    CHECK(http_run.objects == local_run.objects);
    CHECK(http_run.images == local_run.images);
    const auto a = read_coco_panoptic(http_run.dataset_path);
    const auto b = read_coco_panoptic(local_run.dataset_path);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        REQUIRE(a.records[i].objects.size() == b.records[i].objects.size());
        for (std::size_t j = 0; j < a.records[i].objects.size(); ++j) {
            CHECK(a.records[i].objects[j].mask == b.records[i].objects[j].mask);
            CHECK(a.records[i].objects[j].uncertainty == b.records[i].objects[j].uncertainty);
        }
    }
    server.stop();
}
