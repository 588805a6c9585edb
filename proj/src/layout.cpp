#include "dreamforge/layout.hpp"

#include "dreamforge/hashing.hpp"

namespace dreamforge {

namespace {

Json layout_body(const Layout& l) {
    Json items = Json::array();
    for (const auto& it : l.items) items.push_back(Json{{"category_id", it.category_id}, {"class_name", it.class_name}, {"bbox", it.box}});
    return Json{{"canvas", Json::array({l.canvas_width, l.canvas_height})},
                {"items", std::move(items)},
                {"description", l.description}};
}

}  // namespace

std::string layout_content_id(const Layout& layout) {
    return "layout-" + sha256_hex(canonical_dump(layout_body(layout))).substr(0, 16);
}

std::string_view to_string(LayoutRejection r) noexcept {
    switch (r) {
        case LayoutRejection::none: return "accepted";
        case LayoutRejection::degenerate: return "degenerate";
        case LayoutRejection::out_of_bounds: return "out-of-bounds";
        case LayoutRejection::overlap: return "overlap";
        case LayoutRejection::unknown_category: return "unknown-category";
    }
    return "unknown";
}

LayoutVerdict validate_layout(const Layout& layout, const LayoutLimits& limits, const Vocabulary* vocab) {
    if (layout.canvas_width <= 0 || layout.canvas_height <= 0) {
        return {LayoutRejection::degenerate, "canvas must be positive"};
    }
    if (layout.items.empty()) return {LayoutRejection::degenerate, "layout has no items"};
    if (static_cast<int>(layout.items.size()) > limits.max_objects) {
        return {LayoutRejection::degenerate, "more than " + std::to_string(limits.max_objects) + " items"};
    }
    for (std::size_t i = 0; i < layout.items.size(); ++i) {
        const auto& it = layout.items[i];
        const BBox& b = it.box;
        if (b.w < limits.min_box_px || b.h < limits.min_box_px) {
            return {LayoutRejection::degenerate, "item " + std::to_string(i) + " side below min_box_px"};
        }
        if (!b.fits(layout.canvas_width, layout.canvas_height)) {
            return {LayoutRejection::out_of_bounds, "item " + std::to_string(i) + " exceeds canvas"};
        }
        if (vocab != nullptr && vocab->find(it.category_id) == nullptr) {
            return {LayoutRejection::unknown_category, "item " + std::to_string(i) + " category not in vocabulary"};
        }
    }
    for (std::size_t i = 0; i < layout.items.size(); ++i) {
        for (std::size_t k = i + 1; k < layout.items.size(); ++k) {
            const double v = iou(layout.items[i].box, layout.items[k].box);
            if (v > limits.overlap_max) {
                return {LayoutRejection::overlap,
                        "items " + std::to_string(i) + "," + std::to_string(k) + " iou " + std::to_string(v)};
            }
        }
    }
    return {};
}

void to_json(Json& j, const Layout& l) {
    j = layout_body(l);
    j["layout_id"] = l.layout_id;
}

void from_json(const Json& j, Layout& l) {
    l.layout_id = j.at("layout_id").get<std::string>();
    l.canvas_width = j.at("canvas").at(0).get<int>();
    l.canvas_height = j.at("canvas").at(1).get<int>();
    l.description = j.value("description", std::string{});
    l.items.clear();
    for (const auto& it : j.at("items")) {
        l.items.push_back(LayoutItem{it.at("category_id").get<CategoryId>(), it.value("class_name", std::string{}),
                                     it.at("bbox").get<BBox>()});
    }
}

}  // namespace dreamforge
