#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dreamforge/dataset.hpp"
#include "dreamforge/json_io.hpp"

namespace dreamforge {

struct LayoutItem {
    CategoryId category_id;
    std::string class_name;
    BBox box;

    bool operator==(const LayoutItem&) const = default;
};

/// Image plan: canvas plus one box per object. layout_id is a content hash.
struct Layout {
    std::string layout_id;
    int canvas_width = 1024;
    int canvas_height = 1024;
    std::vector<LayoutItem> items;
    std::string description;

    bool operator==(const Layout&) const = default;
};

/// Recomputes the content hash over canvas, items and description.
std::string layout_content_id(const Layout& layout);

struct LayoutLimits {
    double overlap_max = 0.30;
    int min_box_px = 32;
    int max_objects = 6;
};

enum class LayoutRejection { none, degenerate, out_of_bounds, overlap, unknown_category };

std::string_view to_string(LayoutRejection r) noexcept;

struct LayoutVerdict {
    LayoutRejection reason = LayoutRejection::none;
    std::string detail;

    bool accepted() const noexcept { return reason == LayoutRejection::none; }
};

/// Checks the layout invariants. Rejection is a value, never an exception.
/// Categories are only checked when a vocabulary is supplied.
LayoutVerdict validate_layout(const Layout& layout, const LayoutLimits& limits, const Vocabulary* vocab = nullptr);

/// Pixel-space layout JSON: {"layout_id", "canvas": [w, h], "items": [{"category_id", "class_name", "bbox"}], "description"}.
void to_json(Json& j, const Layout& l);
void from_json(const Json& j, Layout& l);

}  // namespace dreamforge
