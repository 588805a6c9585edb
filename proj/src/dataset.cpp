#include "dreamforge/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

#include "dreamforge/errors.hpp"

namespace dreamforge {

std::string_view to_string(Origin o) noexcept { return o == Origin::train ? "train" : "novel"; }

std::string_view to_string(Source s) noexcept { return s == Source::real ? "real" : "synthetic"; }

Origin parse_origin(std::string_view s) {
    if (s == "train") return Origin::train;
    if (s == "novel") return Origin::novel;
    throw ContractViolation("unknown category origin: " + std::string(s));
}

Source parse_source(std::string_view s) {
    if (s == "real") return Source::real;
    if (s == "synthetic") return Source::synthetic;
    throw ContractViolation("unknown image source: " + std::string(s));
}

std::string canonical_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (char ch : name) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

Vocabulary::Vocabulary(std::vector<Category> categories) {
    for (auto& c : categories) add(std::move(c));
}

void Vocabulary::add(Category c) {
    if (c.id.value < 0) throw ContractViolation("category id must be non-negative");
    if (canonical_name(c.name).empty()) throw ContractViolation("category name must be non-empty");
    if (find(c.id) != nullptr) throw ContractViolation("duplicate category id " + std::to_string(c.id.value));
    if (find_name(c.name) != nullptr) throw ContractViolation("duplicate category name '" + c.name + "'");
    categories_.push_back(std::move(c));
}

CategoryId Vocabulary::add(std::string name, Origin origin) {
    const CategoryId id = next_id();
    add(Category{id, std::move(name), origin});
    return id;
}

const Category* Vocabulary::find(CategoryId id) const noexcept {
    for (const auto& c : categories_) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

const Category* Vocabulary::find_name(std::string_view name) const {
    const std::string key = canonical_name(name);
    for (const auto& c : categories_) {
        if (canonical_name(c.name) == key) return &c;
    }
    return nullptr;
}

std::vector<Category> Vocabulary::with_origin(Origin o) const {
    std::vector<Category> out;
    std::copy_if(categories_.begin(), categories_.end(), std::back_inserter(out),
                 [o](const Category& c) { return c.origin == o; });
    return out;
}

CategoryId Vocabulary::next_id() const noexcept {
    std::int64_t next = 0;
    for (const auto& c : categories_) next = std::max(next, c.id.value + 1);
    return CategoryId{next};
}

double iou(const BBox& a, const BBox& b) noexcept {
    if (a.area() <= 0 || b.area() <= 0) return 0.0;
    const std::int64_t ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const std::int64_t iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const std::int64_t inter = ix * iy;
    const std::int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Mask::Mask(int width, int height, std::vector<std::uint32_t> runs)
    : width_(width), height_(height), runs_(std::move(runs)) {
    if (width <= 0 || height <= 0) throw MalformedMask("mask dimensions must be positive");
    if (runs_.empty()) throw MalformedMask("mask has no runs");
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        if (i > 0 && runs_[i] == 0) throw MalformedMask("zero-length run at index " + std::to_string(i));
        total += runs_[i];
    }
    const auto expected = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    if (total != expected) {
        throw MalformedMask("run sum " + std::to_string(total) + " != " + std::to_string(expected));
    }
}

Mask Mask::empty(int width, int height) {
    return Mask(width, height, {static_cast<std::uint32_t>(static_cast<std::int64_t>(width) * height)});
}

std::int64_t Mask::area() const noexcept {
    std::int64_t n = 0;
    for (std::size_t i = 1; i < runs_.size(); i += 2) n += runs_[i];
    return n;
}

std::optional<BBox> Mask::bounds() const {
    int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
    for_each_span([&](int row, int b, int e) {
        x0 = std::min(x0, b);
        x1 = std::max(x1, e - 1);
        y0 = std::min(y0, row);
        y1 = std::max(y1, row);
    });
    if (x1 < 0) return std::nullopt;
    return BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

bool mask_within_box(const Mask& mask, const BBox& box) {
    bool inside = true;
    mask.for_each_span([&](int row, int b, int e) {
        if (row < box.y || row >= box.y + box.h || b < box.x || e > box.x + box.w) inside = false;
    });
    return inside;
}

std::vector<std::string> validate_record(const ImageRecord& record, const Vocabulary& vocab) {
    std::vector<std::string> problems;
    const std::string where = "image " + std::to_string(record.image_id.value);
    if (record.width <= 0 || record.height <= 0) problems.push_back(where + ": non-positive dimensions");
    if (record.source == Source::synthetic && !record.layout_id) {
        problems.push_back(where + ": synthetic record without layout id");
    }
    std::set<std::int64_t> seen;
    for (const auto& obj : record.objects) {
        const std::string ow = where + " object " + std::to_string(obj.object_id.value);
        if (!seen.insert(obj.object_id.value).second) problems.push_back(ow + ": duplicate object id");
        if (vocab.find(obj.category_id) == nullptr) problems.push_back(ow + ": unknown category");
        if (!obj.bbox.fits(record.width, record.height)) problems.push_back(ow + ": bbox outside image");
        if (obj.mask.width() != record.width || obj.mask.height() != record.height) {
            problems.push_back(ow + ": mask size differs from image");
        } else if (!mask_within_box(obj.mask, obj.bbox)) {
            problems.push_back(ow + ": mask pixels outside bbox");
        }
        if (obj.clip_score && (*obj.clip_score < 0.0 || *obj.clip_score > 1.0)) {
            problems.push_back(ow + ": clip score outside [0,1]");
        }
        if (obj.uncertainty && (*obj.uncertainty < 0.0 || *obj.uncertainty > 1.0)) {
            problems.push_back(ow + ": uncertainty outside [0,1]");
        }
    }
    return problems;
}

}  // namespace dreamforge
