#include "dreamforge/json_io.hpp"

namespace dreamforge {

namespace {

template <class T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <class T>
std::optional<T> get_optional(const Json& j, const char* key) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<T>();
    return std::nullopt;
}

}  // namespace

void to_json(Json& j, const Category& c) {
    j = Json{{"id", c.id}, {"name", c.name}, {"origin", std::string(to_string(c.origin))}};
}

void from_json(const Json& j, Category& c) {
    c.id = j.at("id").get<CategoryId>();
    c.name = j.at("name").get<std::string>();
    c.origin = parse_origin(j.at("origin").get<std::string>());
}

void to_json(Json& j, const Vocabulary& v) {
    j = Json::array();
    for (const auto& c : v.categories()) j.push_back(c);
}

void from_json(const Json& j, Vocabulary& v) {
    v = Vocabulary(j.get<std::vector<Category>>());
}

void to_json(Json& j, const BBox& b) { j = Json::array({b.x, b.y, b.w, b.h}); }

void from_json(const Json& j, BBox& b) {
    b = BBox{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

void to_json(Json& j, const Mask& m) {
    j = Json{{"size", Json::array({m.height(), m.width()})}, {"counts", m.runs()}};
}

void from_json(const Json& j, Mask& m) {
    const auto& size = j.at("size");
    m = Mask(size.at(1).get<int>(), size.at(0).get<int>(), j.at("counts").get<std::vector<std::uint32_t>>());
}

void to_json(Json& j, const ObjectInstance& o) {
    j = Json{{"id", o.object_id},
             {"category_id", o.category_id},
             {"bbox", o.bbox},
             {"area", o.mask.area()},
             {"segmentation", o.mask},
             {"confidence_uri", o.confidence_uri}};
    put_optional(j, "clip_score", o.clip_score);
    put_optional(j, "uncertainty", o.uncertainty);
}

void from_json(const Json& j, ObjectInstance& o) {
    o.object_id = j.at("id").get<ObjectId>();
    o.category_id = j.at("category_id").get<CategoryId>();
    o.bbox = j.at("bbox").get<BBox>();
    o.mask = j.at("segmentation").get<Mask>();
    o.confidence_uri = j.value("confidence_uri", std::string{});
    o.clip_score = get_optional<double>(j, "clip_score");
    o.uncertainty = get_optional<double>(j, "uncertainty");
}

void to_json(Json& j, const ImageRecord& r) {
    j = Json{{"id", r.image_id},
             {"width", r.width},
             {"height", r.height},
             {"source", std::string(to_string(r.source))},
             {"file_name", r.image_uri},
             {"objects", r.objects}};
    put_optional(j, "layout_id", r.layout_id);
    put_optional(j, "clip_score", r.clip_score);
}

void from_json(const Json& j, ImageRecord& r) {
    r.image_id = j.at("id").get<ImageId>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.source = parse_source(j.at("source").get<std::string>());
    r.image_uri = j.at("file_name").get<std::string>();
    r.objects = j.at("objects").get<std::vector<ObjectInstance>>();
    r.layout_id = get_optional<std::string>(j, "layout_id");
    r.clip_score = get_optional<double>(j, "clip_score");
}

std::string canonical_dump(const Json& j) { return j.dump(); }

}  // namespace dreamforge
