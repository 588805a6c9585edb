#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dreamforge {

/// Integer identifier tagged by what it identifies, so ids of different kinds never mix.
template <class Tag>
struct Id {
    std::int64_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::int64_t v) : value(v) {}
    constexpr auto operator<=>(const Id&) const = default;
};

using CategoryId = Id<struct CategoryTag>;
using ObjectId = Id<struct ObjectTag>;
using ImageId = Id<struct ImageTag>;

enum class Origin { train, novel };
enum class Source { real, synthetic };

std::string_view to_string(Origin o) noexcept;
std::string_view to_string(Source s) noexcept;
Origin parse_origin(std::string_view s);
Source parse_source(std::string_view s);

/// Lowercase, trim, collapse inner whitespace to single spaces.
std::string canonical_name(std::string_view name);

struct Category {
    CategoryId id;
    std::string name;
    Origin origin = Origin::train;

    bool operator==(const Category&) const = default;
};

/// Ordered category list. ids are unique and names are unique case-insensitively,
/// which also keeps the train and novel name sets disjoint.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<Category> categories);

    /// Throws ContractViolation on a duplicate id, duplicate name or empty name.
    void add(Category c);

    /// Appends a category under the next free id and returns that id.
    CategoryId add(std::string name, Origin origin);

    const std::vector<Category>& categories() const noexcept { return categories_; }
    std::size_t size() const noexcept { return categories_.size(); }
    bool empty() const noexcept { return categories_.empty(); }

    const Category* find(CategoryId id) const noexcept;
    const Category* find_name(std::string_view name) const;
    std::vector<Category> with_origin(Origin o) const;
    CategoryId next_id() const noexcept;

    bool operator==(const Vocabulary&) const = default;

private:
    std::vector<Category> categories_;
};

struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    std::int64_t area() const noexcept { return static_cast<std::int64_t>(w) * h; }
    bool well_formed() const noexcept { return x >= 0 && y >= 0 && w > 0 && h > 0; }
    bool fits(int width, int height) const noexcept {
        return well_formed() && x + w <= width && y + h <= height;
    }
    bool contains(int px, int py) const noexcept { return px >= x && px < x + w && py >= y && py < y + h; }

    bool operator==(const BBox&) const = default;
};

/// Intersection over union of two boxes, 0 when either is empty.
double iou(const BBox& a, const BBox& b) noexcept;

/// Row-major binary grid, one byte per pixel (0 or 1).
struct BitGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BitGrid() = default;
    BitGrid(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    void set(int x, int y, std::uint8_t v = 1) { bits[static_cast<std::size_t>(y) * width + x] = v; }
    bool operator==(const BitGrid&) const = default;
};

/// Uncompressed COCO-style run-length mask. Runs are row-major and alternate,
/// the first run counting zeros (it may be 0 when the first pixel is set).
class Mask {
public:
    Mask() = default;

    /// Throws MalformedMask unless sum(runs) == width*height and no run after
    /// the first is zero.
    Mask(int width, int height, std::vector<std::uint32_t> runs);

    /// All-zero mask.
    static Mask empty(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const std::vector<std::uint32_t>& runs() const noexcept { return runs_; }

    /// Number of set pixels.
    std::int64_t area() const noexcept;

    /// Calls fn(row, col_begin, col_end) for every maximal horizontal span of set pixels, in row-major order.
    template <class Fn>
    void for_each_span(Fn&& fn) const;

    /// Tightest box around the set pixels, nullopt for an empty mask.
    std::optional<BBox> bounds() const;

    bool operator==(const Mask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint32_t> runs_;
};

template <class Fn>
void Mask::for_each_span(Fn&& fn) const {
    std::int64_t pos = 0;
    const std::int64_t w = width_;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        const std::int64_t len = runs_[i];
        if (i % 2 == 1) {
            std::int64_t start = pos;
            const std::int64_t end = pos + len;
            while (start < end) {
                const std::int64_t row = start / w;
                const std::int64_t row_end = std::min(end, (row + 1) * w);
                fn(static_cast<int>(row), static_cast<int>(start - row * w), static_cast<int>(row_end - row * w));
                start = row_end;
            }
        }
        pos += len;
    }
}

/// Per-pixel prediction confidence stored at bounding-box resolution.
struct ConfidenceMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const ConfidenceMap&) const = default;
};

/// One annotated object. The confidence map is referenced by URI and loaded on
/// demand; it is never stored inline in datasets or manifests.
struct ObjectInstance {
    ObjectId object_id;
    CategoryId category_id;
    BBox bbox;
    Mask mask;
    std::string confidence_uri;
    std::optional<double> clip_score;
    std::optional<double> uncertainty;

    bool operator==(const ObjectInstance&) const = default;
};

struct ImageRecord {
    ImageId image_id;
    int width = 0;
    int height = 0;
    Source source = Source::synthetic;
    std::vector<ObjectInstance> objects;
    std::string image_uri;
    std::optional<std::string> layout_id;
    std::optional<double> clip_score;

    bool operator==(const ImageRecord&) const = default;
};

/// Human-readable invariant violations of one record, empty when valid.
std::vector<std::string> validate_record(const ImageRecord& record, const Vocabulary& vocab);

/// Every set bit of the mask lies inside the box.
bool mask_within_box(const Mask& mask, const BBox& box);

}  // namespace dreamforge

template <class Tag>
struct std::hash<dreamforge::Id<Tag>> {
    std::size_t operator()(const dreamforge::Id<Tag>& id) const noexcept {
        return std::hash<std::int64_t>{}(id.value);
    }
};
