#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dreamforge/dataset.hpp"
#include "dreamforge/layout.hpp"
#include "dreamforge/providers.hpp"

namespace dreamforge {

/// Uniformly samples between 1 and max_classes distinct categories (without replacement).
std::vector<Category> sample_classes(const Vocabulary& vocab, int max_classes, std::uint64_t seed);

/// Parses an induction reply: strict JSON {"objects": [{"class", "box": [x, y, w, h]}]}
/// with coordinates normalized to [0, 1], scaled to the canvas. Throws
/// ContractViolation for malformed JSON, out-of-range coordinates, or classes
/// outside `class_sample`.
Layout parse_induced_layout(std::string_view reply, const std::vector<Category>& class_sample, int canvas_width,
                            int canvas_height);

struct PlanOutcome {
    std::optional<Layout> layout;
    int induce_attempts = 0;
    std::vector<std::string> parse_errors;
};

/// Two-stage planning: a coarse description, then induction into a strict JSON
/// layout, re-prompting up to `max_retries` times when the reply does not parse.
/// The layout is not validated here.
PlanOutcome plan_layout(const std::vector<Category>& class_sample, std::uint64_t seed, int canvas_width,
                        int canvas_height, int max_retries, ProviderSession& session);

/// Index of the candidate with the largest area; ties go to the lowest index.
std::optional<std::size_t> largest_candidate(const std::vector<MaskCandidate>& candidates);

/// Restricts a mask to a box.
Mask clip_to_box(const Mask& mask, const BBox& box);

struct AnnotationOutcome {
    std::vector<ObjectInstance> objects;
    std::vector<std::string> failures;  ///< one line per omitted layout item
};

/// For every layout item, asks the mask generator for candidates inside its
/// box and keeps the largest. Object ids are first_object_id + item index.
AnnotationOutcome annotate_objects(const ImageHandle& image, const Layout& layout, std::int64_t first_object_id,
                                   ProviderSession& session);

}  // namespace dreamforge
