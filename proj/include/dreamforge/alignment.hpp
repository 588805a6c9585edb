#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dreamforge/dataset.hpp"
#include "dreamforge/json_io.hpp"

namespace dreamforge {

struct FeatureVec {
    std::vector<double> values;
    CategoryId class_id;
    Source source = Source::real;

    bool operator==(const FeatureVec&) const = default;
};

/// Bounded per-class queue of real-object features. New features enter as
/// most recent; once the queue exceeds its capacity the least recently
/// enqueued feature leaves. Reads never reorder entries, so recency is
/// enqueue order.
class MemoryBank {
public:
    MemoryBank(CategoryId class_id, std::size_t capacity, std::size_t dimension);

    /// Throws ContractViolation for synthetic features, another class, or a wrong length.
    void update(FeatureVec f);

    /// Elementwise mean of the entries. Throws DegenerateData when empty.
    FeatureVec prototype() const;

    CategoryId class_id() const noexcept { return class_id_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::deque<FeatureVec>& entries() const noexcept { return entries_; }

    bool operator==(const MemoryBank&) const = default;

private:
    CategoryId class_id_;
    std::size_t capacity_;
    std::size_t dimension_;
    std::deque<FeatureVec> entries_;
};

/// 1 - cos(synthetic, prototype), in [0, 2]. Throws DegenerateData for a zero-norm input.
double sra_loss(std::span<const double> synthetic, std::span<const double> prototype);

/// Gradient of sra_loss with respect to the synthetic feature; the prototype is
/// a constant. The result is orthogonal to `synthetic`.
std::vector<double> sra_grad(std::span<const double> synthetic, std::span<const double> prototype);

/// l_seg + lambda * l_sra. Throws ContractViolation for a negative lambda.
double total_loss(double l_seg, double l_sra, double lambda);

/// One bank per class, all with the same capacity and dimension.
class BankSet {
public:
    BankSet(std::size_t capacity, std::size_t dimension) : capacity_(capacity), dimension_(dimension) {}

    /// Routes a real feature to its class bank, creating the bank on first use.
    void update(FeatureVec f);

    /// Prototype of the class, nullopt when the class has no bank or it is empty.
    std::optional<FeatureVec> prototype(CategoryId class_id) const;

    const MemoryBank* find(CategoryId class_id) const;
    const std::map<CategoryId, MemoryBank>& banks() const noexcept { return banks_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t dimension() const noexcept { return dimension_; }

    bool operator==(const BankSet&) const = default;

private:
    std::size_t capacity_;
    std::size_t dimension_;
    std::map<CategoryId, MemoryBank> banks_;
};

/// Checkpoint format: {"version": "banks/v1", "capacity", "dimension", "banks": [{"class_id", "entries"}]}.
Json bank_snapshot(const BankSet& banks);
BankSet restore_banks(const Json& snapshot);

struct SraBatch {
    double mean_loss = 0.0;      ///< mean over objects whose class has a prototype, 0 if none
    std::size_t counted = 0;
    std::size_t skipped = 0;     ///< objects without a prototype this step
    std::vector<double> losses;  ///< per object, NaN when skipped
    /// d(mean_loss)/d(feature) per object; zero vectors for skipped objects.
    std::vector<std::vector<double>> grads;
};

/// Per-batch alignment term: mean of per-object losses over objects whose
/// class bank is non-empty. Prototypes are read once, before any update.
SraBatch sra_batch(const std::vector<FeatureVec>& synthetic, const BankSet& banks);

}  // namespace dreamforge
