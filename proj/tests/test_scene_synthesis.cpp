#include "doctest.h"

#include <set>

#include "dreamforge/errors.hpp"
#include "dreamforge/prompts.hpp"
#include "dreamforge/rle.hpp"
#include "dreamforge/scene_synthesis.hpp"
#include "dreamforge/stub_providers.hpp"

using namespace dreamforge;

namespace {

Vocabulary vocab() {
    Vocabulary v;
    for (const char* n : {"dog", "cat", "sofa", "person", "car", "cup", "chair", "boat"}) v.add(n, Origin::train);
    return v;
}

std::vector<Category> pick(const Vocabulary& v, std::initializer_list<const char*> names) {
    std::vector<Category> out;
    for (const char* n : names) out.push_back(*v.find_name(n));
    return out;
}

// Replies to induce prompts from a queue; describe prompts get a fixed sentence.
struct QueueLlm : LlmProvider {
    std::vector<std::string> induce_replies;
    std::size_t next = 0;
    std::string complete(const std::string& prompt, std::uint64_t) override {
        if (prompts::task_of(prompt) == std::optional<std::string>("describe")) return "a scene";
        return induce_replies.at(std::min(next++, induce_replies.size() - 1));
    }
    bool in_process() const noexcept override { return true; }
};

// Returns candidates with the given areas, each a horizontal strip at the box origin.
struct AreaMasks : MaskGenerator {
    std::vector<int> areas;
    std::vector<MaskCandidate> propose(const ImageHandle& image, const BBox& box) override {
        std::vector<MaskCandidate> out;
        for (std::size_t k = 0; k < areas.size(); ++k) {
            BitGrid local(box.w, box.h);
            for (int i = 0; i < areas[k]; ++i) local.set(i % box.w, i / box.w);
            Mask m = rle_encode_in_box(image.width, image.height, box, local);
            out.push_back({m, "cand-" + std::to_string(k), m.area()});
        }
        return out;
    }
    ConfidenceMap fetch_confidence(const std::string&) override { return {}; }
    bool in_process() const noexcept override { return true; }
};

LayoutLimits limits() { return LayoutLimits{0.30, 32, 6}; }

Layout canvas_layout(std::vector<LayoutItem> items) {
    Layout l;
    l.canvas_width = 200;
    l.canvas_height = 200;
    l.items = std::move(items);
    return l;
}

}  // namespace

TEST_CASE("class sampling draws 1..max distinct classes deterministically") {
    const Vocabulary v = vocab();
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto sample = sample_classes(v, 6, s);
        CHECK(sample.size() >= 1);
        CHECK(sample.size() <= 6);
        std::set<std::int64_t> ids;
        for (const auto& c : sample) ids.insert(c.id.value);
        CHECK(ids.size() == sample.size());
        CHECK(sample == sample_classes(v, 6, s));
    }
}

TEST_CASE("induction parsing scales normalized boxes and enforces the class subset") {
    const Vocabulary v = vocab();
    const auto sample = pick(v, {"dog", "sofa"});
    const auto l = parse_induced_layout(R"({"objects":[{"class":"Dog","box":[0.1,0.2,0.25,0.5]}]})", sample, 1024, 1024);
    REQUIRE(l.items.size() == 1);
    CHECK(l.items[0].box == BBox{102, 204, 256, 512});
    CHECK(l.items[0].category_id == v.find_name("dog")->id);
    CHECK_THROWS_AS(parse_induced_layout(R"({"objects":[{"class":"cat","box":[0,0,0.1,0.1]}]})", sample, 64, 64),
                    ContractViolation);
    CHECK_THROWS_AS(parse_induced_layout(R"({"objects":[{"class":"dog","box":[0,0,1.5,0.1]}]})", sample, 64, 64),
                    ContractViolation);
    CHECK_THROWS_AS(parse_induced_layout(R"({"objects":[{"class":"dog","box":[0,0)", sample, 64, 64), ContractViolation);
    CHECK_THROWS_AS(parse_induced_layout(R"({"items":[]})", sample, 64, 64), ContractViolation);
}

TEST_CASE("stub planning for a single class gives a one-item layout inside the canvas") {
    const Vocabulary v = vocab();
    const ProviderSet set = make_stub_providers();
    int planned = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        ProviderSession session(set);
        const auto out = plan_layout(pick(v, {"dog"}), s, 1024, 1024, 3, session);
        if (!out.layout) continue;
        ++planned;
        CHECK(out.layout->items.size() == 1);
        CHECK(out.layout->items[0].box.fits(1024, 1024));
        CHECK(out.layout->layout_id == layout_content_id(*out.layout));
        ProviderSession again(set);
        CHECK(plan_layout(pick(v, {"dog"}), s, 1024, 1024, 3, again).layout->layout_id == out.layout->layout_id);
    }
    CHECK(planned >= 18);
}

TEST_CASE("planning retries unparseable replies up to the limit") {
    const Vocabulary v = vocab();
    auto llm = std::make_shared<QueueLlm>();
    llm->induce_replies = {"not json", R"({"objects":[{"class":"unicorn","box":[0,0,0.5,0.5]}]})",
                           R"({"objects":[{"class":"dog","box":[0,0,0.5,0.5]}]})"};
    ProviderSet set = make_stub_providers();
    set.llm = llm;
    ProviderSession session(set);
    auto out = plan_layout(pick(v, {"dog"}), 1, 100, 100, 3, session);
    REQUIRE(out.layout);
    CHECK(out.induce_attempts == 3);
    CHECK(out.parse_errors.size() == 2);
    CHECK(out.layout->description == "a scene");
    CHECK(session.log().size() == 4);

    llm->induce_replies = {"nope"};
    llm->next = 0;
    ProviderSession s2(set);
    out = plan_layout(pick(v, {"dog"}), 1, 100, 100, 3, s2);
    CHECK_FALSE(out.layout);
    CHECK(out.induce_attempts == 4);
}

TEST_CASE("layout validation") {
    const Vocabulary v = vocab();
    const CategoryId dog = v.find_name("dog")->id;
    CHECK(validate_layout(canvas_layout({}), limits(), &v).reason == LayoutRejection::degenerate);
    CHECK(validate_layout(canvas_layout({{dog, "dog", BBox{180, 0, 40, 40}}}), limits(), &v).reason ==
          LayoutRejection::out_of_bounds);
    CHECK(validate_layout(canvas_layout({{dog, "dog", BBox{0, 0, 20, 40}}}), limits(), &v).reason ==
          LayoutRejection::degenerate);
    CHECK(validate_layout(canvas_layout({{CategoryId{99}, "x", BBox{0, 0, 40, 40}}}), limits(), &v).reason ==
          LayoutRejection::unknown_category);
    // IoU = 2400 / 4800 = 0.5 by direct area arithmetic
    const Layout overlap = canvas_layout({{dog, "dog", BBox{0, 0, 60, 60}}, {dog, "dog", BBox{20, 0, 60, 60}}});
    CHECK(iou(overlap.items[0].box, overlap.items[1].box) == 0.5);
    CHECK(validate_layout(overlap, limits(), &v).reason == LayoutRejection::overlap);
    const Layout ok = canvas_layout({{dog, "dog", BBox{0, 0, 60, 60}}, {dog, "dog", BBox{100, 100, 60, 60}}});
    CHECK(validate_layout(ok, limits(), &v).accepted());
    std::vector<LayoutItem> many;
    for (int i = 0; i < 7; ++i) many.push_back({dog, "dog", BBox{i * 2, 0, 1, 1}});
    CHECK_FALSE(validate_layout(canvas_layout(many), limits(), &v).accepted());
}

TEST_CASE("largest candidate wins, ties go to the lowest index") {
    auto masks = std::make_shared<AreaMasks>();
    ProviderSet set = make_stub_providers();
    set.masks = masks;
    const ImageHandle img{"x", 64, 64};
    const Layout l = [] {
        Layout x;
        x.canvas_width = 64;
        x.canvas_height = 64;
        x.items.push_back({CategoryId{3}, "sofa", BBox{2, 2, 30, 30}});
        return x;
    }();

    masks->areas = {100, 250, 40};
    ProviderSession s1(set);
    auto out = annotate_objects(img, l, 500, s1);
    REQUIRE(out.objects.size() == 1);
    CHECK(out.objects[0].mask.area() == 250);
    CHECK(out.objects[0].confidence_uri == "cand-1");
    CHECK(out.objects[0].object_id == ObjectId{500});
    CHECK(out.objects[0].category_id == CategoryId{3});

    masks->areas = {70, 90, 90};
    ProviderSession s2(set);
    out = annotate_objects(img, l, 0, s2);
    CHECK(out.objects[0].confidence_uri == "cand-1");

    masks->areas = {};
    ProviderSession s3(set);
    out = annotate_objects(img, l, 0, s3);
    CHECK(out.objects.empty());
    CHECK(out.failures.size() == 1);
}

TEST_CASE("stub annotation returns the painted patch bit-exactly") {
    const ProviderSet set = make_stub_providers();
    Layout l;
    l.canvas_width = 128;
    l.canvas_height = 128;
    l.items.push_back({CategoryId{0}, "dog", BBox{10, 10, 40, 40}});
    l.items.push_back({CategoryId{1}, "cat", BBox{70, 60, 50, 30}});
    ProviderSession session(set);
    const auto img = session.generate_image(l, 4).image;
    const auto out = annotate_objects(img, l, 100, session);
    REQUIRE(out.objects.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const BBox& box = l.items[i].box;
        BitGrid full(128, 128);
        for (int y = box.y; y < box.y + box.h; ++y) {
            for (int x = box.x; x < box.x + box.w; ++x) full.set(x, y);
        }
        CHECK(out.objects[i].mask == rle_encode(full));
        CHECK(mask_within_box(out.objects[i].mask, box));
    }
}

TEST_CASE("clip_to_box removes pixels outside the box") {
    BitGrid g(10, 10);
    for (int i = 0; i < 100; ++i) g.set(i % 10, i / 10);
    const Mask clipped = clip_to_box(rle_encode(g), BBox{2, 3, 4, 5});
    CHECK(clipped.area() == 20);
    CHECK(mask_within_box(clipped, BBox{2, 3, 4, 5}));
}
