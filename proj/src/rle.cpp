#include "dreamforge/rle.hpp"

#include "dreamforge/errors.hpp"

namespace dreamforge {

namespace {

// Accumulates runs from a stream of pixel values. Starts in the "zeros" state.
class RunBuilder {
public:
    void push(std::uint8_t bit, std::uint32_t count) {
        if (count == 0) return;
        const std::uint8_t b = bit ? 1 : 0;
        if (b != current_) {
            runs_.push_back(length_);
            length_ = 0;
            current_ = b;
        }
        length_ += count;
    }

    std::vector<std::uint32_t> finish() && {
        runs_.push_back(length_);
        return std::move(runs_);
    }

private:
    std::vector<std::uint32_t> runs_;
    std::uint32_t length_ = 0;
    std::uint8_t current_ = 0;
};

}  // namespace

Mask rle_encode(const BitGrid& grid) {
    if (grid.width <= 0 || grid.height <= 0 || grid.bits.size() != static_cast<std::size_t>(grid.width) * grid.height) {
        throw ContractViolation("rle_encode: grid must be non-empty and consistent");
    }
    RunBuilder rb;
    for (std::uint8_t b : grid.bits) rb.push(b, 1);
    return Mask(grid.width, grid.height, std::move(rb).finish());
}

BitGrid rle_decode(const Mask& mask) {
    BitGrid grid(mask.width(), mask.height());
    std::size_t pos = 0;
    const auto& runs = mask.runs();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i % 2 == 1) std::fill_n(grid.bits.begin() + static_cast<std::ptrdiff_t>(pos), runs[i], std::uint8_t{1});
        pos += runs[i];
    }
    if (pos != grid.bits.size()) throw MalformedMask("rle_decode: run sum mismatch");
    return grid;
}

Mask rle_encode_in_box(int width, int height, const BBox& box, const BitGrid& local) {
    if (!box.fits(width, height) || local.width != box.w || local.height != box.h) {
        throw ContractViolation("rle_encode_in_box: box must fit the canvas and match the local grid");
    }
    RunBuilder rb;
    rb.push(0, static_cast<std::uint32_t>(static_cast<std::int64_t>(box.y) * width));
    for (int r = 0; r < box.h; ++r) {
        rb.push(0, static_cast<std::uint32_t>(box.x));
        for (int c = 0; c < box.w; ++c) rb.push(local.at(c, r), 1);
        rb.push(0, static_cast<std::uint32_t>(width - box.x - box.w));
    }
    rb.push(0, static_cast<std::uint32_t>(static_cast<std::int64_t>(height - box.y - box.h) * width));
    return Mask(width, height, std::move(rb).finish());
}

}  // namespace dreamforge
