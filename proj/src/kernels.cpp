#include "dreamforge/kernels.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "dreamforge/alignment.hpp"
#include "dreamforge/curation.hpp"
#include "dreamforge/errors.hpp"
#include "dreamforge/rle.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dreamforge::kernels {

namespace {

double uncertainty_item(const UncertaintyInput& in) {
    try {
        return object_uncertainty(*in.mask, in.box, *in.confidence);
    } catch (const DegenerateData&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

void check_rows(std::span<const std::span<const double>> rows) {
    if (rows.empty()) throw DegenerateData("column_mean: no rows");
    for (const auto& r : rows) {
        if (r.size() != rows.front().size()) throw ContractViolation("column_mean: ragged rows");
    }
}

double column_mean_at(std::span<const std::span<const double>> rows, std::size_t col) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r[col];
    return sum / static_cast<double>(rows.size());
}

// Runs fn(i) for i in [0, n) and rethrows the first (lowest index) exception after the loop.
template <class Fn>
void checked_parallel_for(std::size_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

namespace serial {

std::vector<double> uncertainties(std::span<const UncertaintyInput> items) {
    std::vector<double> out(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = uncertainty_item(items[i]);
    return out;
}

std::vector<Mask> encode(std::span<const BitGrid> grids) {
    std::vector<Mask> out;
    out.reserve(grids.size());
    for (const auto& g : grids) out.push_back(rle_encode(g));
    return out;
}

std::vector<BitGrid> decode(std::span<const Mask> masks) {
    std::vector<BitGrid> out;
    out.reserve(masks.size());
    for (const auto& m : masks) out.push_back(rle_decode(m));
    return out;
}

std::vector<double> column_mean(std::span<const std::span<const double>> rows) {
    check_rows(rows);
    std::vector<double> out(rows.front().size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = column_mean_at(rows, c);
    return out;
}

SraResult sra(std::span<const SraItem> items) {
    SraResult out{std::vector<double>(items.size()), std::vector<std::vector<double>>(items.size())};
    for (std::size_t i = 0; i < items.size(); ++i) {
        out.losses[i] = sra_loss(items[i].synthetic, items[i].prototype);
        out.grads[i] = sra_grad(items[i].synthetic, items[i].prototype);
    }
    return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> uncertainties(std::span<const UncertaintyInput> items) {
    std::vector<double> out(items.size());
    checked_parallel_for(items.size(), [&](std::size_t i) { out[i] = uncertainty_item(items[i]); });
    return out;
}

std::vector<Mask> encode(std::span<const BitGrid> grids) {
    std::vector<Mask> out(grids.size());
    checked_parallel_for(grids.size(), [&](std::size_t i) { out[i] = rle_encode(grids[i]); });
    return out;
}

std::vector<BitGrid> decode(std::span<const Mask> masks) {
    std::vector<BitGrid> out(masks.size());
    checked_parallel_for(masks.size(), [&](std::size_t i) { out[i] = rle_decode(masks[i]); });
    return out;
}

std::vector<double> column_mean(std::span<const std::span<const double>> rows) {
    check_rows(rows);
    std::vector<double> out(rows.front().size());
    const auto cols = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < cols; ++c) out[static_cast<std::size_t>(c)] = column_mean_at(rows, static_cast<std::size_t>(c));
    return out;
}

SraResult sra(std::span<const SraItem> items) {
    SraResult out{std::vector<double>(items.size()), std::vector<std::vector<double>>(items.size())};
    checked_parallel_for(items.size(), [&](std::size_t i) {
        out.losses[i] = sra_loss(items[i].synthetic, items[i].prototype);
        out.grads[i] = sra_grad(items[i].synthetic, items[i].prototype);
    });
    return out;
}

}  // namespace parallel

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace dreamforge::kernels
