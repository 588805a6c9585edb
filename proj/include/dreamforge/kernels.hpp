#pragma once

// Batch kernels. Every kernel exists twice with the same signature: a plain
// loop in `serial` (the reference) and an OpenMP version in `parallel`.
// Parallel kernels only split independent items or columns, so their results
// are bitwise identical to the serial ones.

#include <cstddef>
#include <span>
#include <vector>

#include "dreamforge/dataset.hpp"

namespace dreamforge::kernels {

struct UncertaintyInput {
    const Mask* mask = nullptr;
    BBox box;
    const ConfidenceMap* confidence = nullptr;
};

struct SraItem {
    std::span<const double> synthetic;
    std::span<const double> prototype;
};

struct SraResult {
    std::vector<double> losses;
    std::vector<std::vector<double>> grads;
};

namespace serial {

/// Per-object mean (1 - confidence) over mask pixels; NaN for an empty mask.
std::vector<double> uncertainties(std::span<const UncertaintyInput> items);
std::vector<Mask> encode(std::span<const BitGrid> grids);
std::vector<BitGrid> decode(std::span<const Mask> masks);
/// Mean of equally long rows, summed row by row for each column.
std::vector<double> column_mean(std::span<const std::span<const double>> rows);
SraResult sra(std::span<const SraItem> items);

}  // namespace serial

namespace parallel {

std::vector<double> uncertainties(std::span<const UncertaintyInput> items);
std::vector<Mask> encode(std::span<const BitGrid> grids);
std::vector<BitGrid> decode(std::span<const Mask> masks);
std::vector<double> column_mean(std::span<const std::span<const double>> rows);
SraResult sra(std::span<const SraItem> items);

}  // namespace parallel

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace dreamforge::kernels
