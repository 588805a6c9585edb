#pragma once

#include "dreamforge/dataset.hpp"

namespace dreamforge {

/// Encodes a non-empty row-major grid into alternating runs, first run counting zeros.
Mask rle_encode(const BitGrid& grid);

/// Inverse of rle_encode.
BitGrid rle_decode(const Mask& mask);

/// Encodes a box-local grid placed at `box` inside a width x height canvas,
/// without materializing the full-resolution grid.
Mask rle_encode_in_box(int width, int height, const BBox& box, const BitGrid& local);

}  // namespace dreamforge
