#include "doctest.h"

#include "dreamforge/dataset.hpp"
#include "dreamforge/errors.hpp"
#include "dreamforge/rle.hpp"

using namespace dreamforge;

TEST_CASE("canonical names") {
    CHECK(canonical_name("  Living   Room ") == "living room");
    CHECK(canonical_name("\tSOFA\n") == "sofa");
    CHECK(canonical_name("   ").empty());
}

TEST_CASE("vocabulary rejects duplicate ids and case-insensitive duplicate names") {
    Vocabulary v;
    v.add(Category{CategoryId{0}, "dog", Origin::train});
    CHECK_THROWS_AS(v.add(Category{CategoryId{0}, "cat", Origin::train}), ContractViolation);
    CHECK_THROWS_AS(v.add(Category{CategoryId{1}, "DOG", Origin::novel}), ContractViolation);
    CHECK_THROWS_AS(v.add(Category{CategoryId{2}, " ", Origin::novel}), ContractViolation);
    const auto id = v.add("puppy", Origin::novel);
    CHECK(id == CategoryId{1});
    CHECK(v.next_id() == CategoryId{2});
    REQUIRE(v.find_name("Puppy") != nullptr);
    CHECK(v.find_name("Puppy")->origin == Origin::novel);
    CHECK(v.with_origin(Origin::train).size() == 1);
    CHECK(v.find(CategoryId{7}) == nullptr);
}

TEST_CASE("origin and source round-trip through strings") {
    CHECK(parse_origin(to_string(Origin::novel)) == Origin::novel);
    CHECK(parse_source(to_string(Source::real)) == Source::real);
    CHECK_THROWS(parse_origin("imagined"));
}

TEST_CASE("box helpers") {
    const BBox a{0, 0, 10, 10};
    const BBox b{5, 0, 10, 10};
    CHECK(iou(a, b) == doctest::Approx(50.0 / 150.0));
    CHECK(iou(a, BBox{20, 20, 5, 5}) == 0.0);
    CHECK(iou(a, a) == 1.0);
    CHECK(a.fits(10, 10));
    CHECK_FALSE(b.fits(10, 10));
    CHECK_FALSE(BBox{0, 0, 0, 3}.well_formed());
    CHECK(a.contains(9, 9));
    CHECK_FALSE(a.contains(10, 0));
}

TEST_CASE("mask construction validates runs") {
    CHECK_NOTHROW(Mask(2, 2, {1, 2, 1}));
    CHECK_NOTHROW(Mask(2, 2, {0, 4}));
    CHECK_THROWS_AS(Mask(2, 2, {1, 2}), MalformedMask);
    CHECK_THROWS_AS(Mask(2, 2, {1, 0, 3}), MalformedMask);
    CHECK_THROWS_AS(Mask(2, 2, {5}), MalformedMask);
    const Mask m(3, 2, {1, 2, 2, 1});
    CHECK(m.area() == 3);
    REQUIRE(m.bounds().has_value());
    CHECK(*m.bounds() == BBox{1, 0, 2, 2});  // row 0: 0 1 1, row 1: 0 0 1
    CHECK_FALSE(Mask::empty(4, 4).bounds().has_value());
    CHECK(Mask::empty(4, 4).area() == 0);
}

TEST_CASE("spans walk set pixels in row-major order across row breaks") {
    const Mask m(3, 2, {2, 3, 1});  // row 0: 0 0 1, row 1: 1 1 0
    std::vector<std::tuple<int, int, int>> spans;
    m.for_each_span([&](int r, int b, int e) { spans.emplace_back(r, b, e); });
    REQUIRE(spans.size() == 2);
    CHECK(spans[0] == std::tuple{0, 2, 3});
    CHECK(spans[1] == std::tuple{1, 0, 2});
}

TEST_CASE("record validation reports containment and vocabulary problems") {
    Vocabulary v;
    v.add("dog", Origin::train);
    ImageRecord rec;
    rec.image_id = ImageId{1};
    rec.width = 8;
    rec.height = 8;
    rec.source = Source::synthetic;
    rec.layout_id = "layout-x";
    rec.image_uri = "img";
    BitGrid local(2, 2);
    local.set(0, 0);
    ObjectInstance o;
    o.object_id = ObjectId{1};
    o.category_id = CategoryId{0};
    o.bbox = BBox{2, 2, 2, 2};
    o.mask = rle_encode_in_box(8, 8, o.bbox, local);
    rec.objects.push_back(o);
    CHECK(validate_record(rec, v).empty());

    auto bad = rec;
    bad.objects[0].bbox = BBox{4, 4, 2, 2};
    CHECK_FALSE(validate_record(bad, v).empty());
    bad = rec;
    bad.objects[0].category_id = CategoryId{5};
    CHECK_FALSE(validate_record(bad, v).empty());
    bad = rec;
    bad.objects.push_back(rec.objects[0]);
    CHECK_FALSE(validate_record(bad, v).empty());
    bad = rec;
    bad.layout_id.reset();
    CHECK_FALSE(validate_record(bad, v).empty());
}
