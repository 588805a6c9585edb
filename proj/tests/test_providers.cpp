#include "doctest.h"

#include <cmath>

#include "dreamforge/errors.hpp"
#include "dreamforge/prompts.hpp"
#include "dreamforge/providers.hpp"
#include "dreamforge/stub_providers.hpp"
#include "dreamforge/vocabulary.hpp"

using namespace dreamforge;

namespace {

Layout two_box_layout() {
    Layout l;
    l.canvas_width = 128;
    l.canvas_height = 96;
    l.items.push_back(LayoutItem{CategoryId{1}, "dog", BBox{4, 4, 40, 30}});
    l.items.push_back(LayoutItem{CategoryId{2}, "cat", BBox{60, 40, 50, 40}});
    l.layout_id = layout_content_id(l);
    return l;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

struct FlakyLlm : LlmProvider {
    int failures;
    bool retryable;
    int calls = 0;
    FlakyLlm(int f, bool r) : failures(f), retryable(r) {}
    std::string complete(const std::string& prompt, std::uint64_t) override {
        ++calls;
        if (calls <= failures) throw ProviderError("boom", retryable);
        return "ok:" + prompt;
    }
    bool in_process() const noexcept override { return true; }
};

}  // namespace

TEST_CASE("endpoint validation") {
    ProviderEndpoint ep;
    CHECK(ep.is_stub());
    CHECK_NOTHROW(ep.validate());
    ep.timeout_s = 0;
    CHECK_THROWS_AS(ep.validate(), ConfigError);
    ep.timeout_s = 1;
    ep.retries = -1;
    CHECK_THROWS_AS(ep.validate(), ConfigError);
    CHECK(parse_provider_kind("score") == ProviderKind::scorer);
    CHECK(parse_provider_kind(to_string(ProviderKind::layout2image)) == ProviderKind::layout2image);
}

TEST_CASE("stub llm is deterministic and seed-sensitive") {
    StubLlm llm;
    const std::string p = prompts::associate("dog");
    CHECK(llm.complete(p, 1) == llm.complete(p, 1));
    CHECK(llm.complete(p, 1) != llm.complete(p, 2));
    const auto names = parse_name_list(llm.complete(p, 3));
    CHECK_FALSE(names.empty());
    CHECK(llm.complete(p, 3).find(',') != std::string::npos);
}

TEST_CASE("stub images paint each box with a class-keyed patch") {
    StubImageGenerator gen;
    const Layout l = two_box_layout();
    const auto a = gen.generate(l, 9);
    const auto b = gen.generate(l, 9);
    CHECK(a.image == b.image);
    CHECK(a.image.width == 128);
    CHECK(a.image.height == 96);
    const StubCanvas canvas = parse_stub_image_uri(a.image.uri);
    CHECK(render_stub_image(canvas) == render_stub_image(parse_stub_image_uri(b.image.uri)));
    CHECK(canvas.top_patch_at(4, 4) == 0);
    CHECK(canvas.top_patch_at(43, 33) == 0);
    CHECK(canvas.top_patch_at(44, 4) == -1);
    CHECK(canvas.top_patch_at(60, 40) == 1);
    CHECK(canvas.color_at(10, 10) == stub_class_color(1));
    CHECK(canvas.color_at(70, 50) == stub_class_color(2));
    CHECK(stub_class_color(1) != stub_class_color(2));

    Layout empty;
    empty.canvas_width = 32;
    empty.canvas_height = 32;
    const auto plain = gen.generate(empty, 1);
    CHECK(parse_stub_image_uri(plain.image.uri).patches.empty());
    CHECK_THROWS_AS(parse_stub_image_uri("file:///x.png"), ProviderError);
}

TEST_CASE("stub masks: largest candidate is the painted patch, candidates stay in the box") {
    StubImageGenerator gen;
    StubMaskGenerator masks;
    const Layout l = two_box_layout();
    const auto img = gen.generate(l, 9).image;
    for (const auto& item : l.items) {
        const auto cands = masks.propose(img, item.box);
        REQUIRE(cands.size() >= 1);
        CHECK(cands == masks.propose(img, item.box));
        CHECK(cands[0].area == item.box.area());
        for (const auto& c : cands) {
            CHECK(c.area == c.mask.area());
            CHECK(mask_within_box(c.mask, item.box));
            CHECK(c.area <= cands[0].area);
            const ConfidenceMap conf = masks.fetch_confidence(c.confidence_uri);
            CHECK(conf.width == item.box.w);
            CHECK(conf.height == item.box.h);
            for (double v : conf.values) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
    const auto tiny = masks.propose(img, BBox{4, 4, 1, 1});
    for (const auto& c : tiny) CHECK(c.area <= 1);
}

TEST_CASE("stub scores are deterministic, in range and roughly uniform") {
    StubScorer scorer;
    const ImageHandle img{"stub://image/x", 64, 64};
    CHECK(scorer.score(img, BBox{1, 2, 3, 4}, "dog") == scorer.score(img, BBox{1, 2, 3, 4}, "dog"));
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double s = scorer.score(img, BBox{i % 60, i / 60 % 60, 1 + i % 7, 1 + i % 5}, "name" + std::to_string(i));
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        sum += s;
    }
    CHECK(std::abs(sum / n - 0.5) <= 0.02);
}

TEST_CASE("stub embeddings: unit norm, synonyms close, unrelated names apart") {
    StubEmbedder e(0);
    CHECK(std::abs(norm(e.embed("dog")) - 1.0) <= 1e-9);
    CHECK(cosine(e.embed("dog"), e.embed("dog")) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(e.embed("sofa"), e.embed("couch")) >= 0.95);
    CHECK(cosine(e.embed("Sofa "), e.embed("sofa")) == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& group : StubEmbedder::synonym_groups()) {
        for (std::size_t i = 1; i < group.size(); ++i) CHECK(cosine(e.embed(group[0]), e.embed(group[i])) >= 0.95);
    }
    int below = 0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
        StubEmbedder es(static_cast<std::uint64_t>(s));
        below += cosine(es.embed("dog"), es.embed("lamp")) < 0.9 ? 1 : 0;
    }
    CHECK(below >= 990);
}

TEST_CASE("session retries retryable errors and logs each call") {
    auto flaky = std::make_shared<FlakyLlm>(2, true);
    ProviderSet set = make_stub_providers();
    set.llm = flaky;
    ProviderSession session(set);
    std::vector<std::chrono::milliseconds> sleeps;
    session.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    CHECK(session.llm_complete("hi", 1) == "ok:hi");
    CHECK(flaky->calls == 3);
    CHECK(sleeps.size() == 2);
    REQUIRE(session.log().size() == 1);
    CHECK(session.log()[0].attempts == 3);
    CHECK(session.log()[0].outcome == "ok");
    CHECK(session.log()[0].latency_ms == 0.0);
    CHECK(session.log()[0].request_hash.size() == 16);
}

TEST_CASE("session gives up after the configured retries and does not retry rejections") {
    auto down = std::make_shared<FlakyLlm>(100, true);
    ProviderSet set = make_stub_providers();
    set.llm = down;
    set.endpoints[0].retries = 2;
    ProviderSession session(set);
    session.set_sleeper([](std::chrono::milliseconds) {});
    CHECK_THROWS_AS(session.llm_complete("hi", 1), ProviderError);
    CHECK(down->calls == 3);
    REQUIRE(session.log().size() == 1);
    CHECK(session.log()[0].outcome.rfind("failed", 0) == 0);

    auto reject = std::make_shared<FlakyLlm>(100, false);
    set.llm = reject;
    ProviderSession s2(set);
    s2.set_sleeper([](std::chrono::milliseconds) {});
    CHECK_THROWS_AS(s2.llm_complete("hi", 1), ProviderError);
    CHECK(reject->calls == 1);
}

TEST_CASE("retry delay grows exponentially with bounded jitter") {
    using std::chrono::milliseconds;
    for (std::uint64_t h : {1ULL, 99ULL, 0xdeadbeefULL}) {
        for (int a = 1; a <= 5; ++a) {
            const auto d = retry_delay(a, h, milliseconds(100)).count();
            const double base = 100.0 * std::pow(2.0, a - 1);
            CHECK(d >= static_cast<long>(0.5 * base) - 1);
            CHECK(d < static_cast<long>(1.5 * base) + 1);
            CHECK(retry_delay(a, h, milliseconds(100)) == retry_delay(a, h, milliseconds(100)));
        }
    }
}

TEST_CASE("prompt templates carry a version tag and fields") {
    const auto p = prompts::induce({"dog", "sofa"}, "a dog on a sofa", 2);
    CHECK(prompts::task_of(p) == std::optional<std::string>("induce"));
    CHECK(prompts::field(p, "Attempt").value_or("") == "2");
    CHECK(prompts::task_of("free text") == std::nullopt);
}
