#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dreamforge/dataset.hpp"
#include "dreamforge/json_io.hpp"
#include "dreamforge/providers.hpp"

namespace dreamforge {

enum class SelectionStage { clip, uncertainty };

std::string_view to_string(SelectionStage s) noexcept;

/// Audit record of one gate. kept + dropped always equals the gate's input size.
struct SelectionReport {
    SelectionStage stage = SelectionStage::clip;
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::map<std::int64_t, std::size_t> per_class_kept;
    double threshold = 0.0;  ///< clip: mean image score; uncertainty: per-class cap n
    std::vector<std::pair<std::int64_t, double>> kept_ids;     ///< (image or object id, score)
    std::vector<std::pair<std::int64_t, double>> dropped_ids;

    bool operator==(const SelectionReport&) const = default;
};

void to_json(Json& j, const SelectionReport& r);
void from_json(const Json& j, SelectionReport& r);

/// Scores every object crop against its class name, stores the per-object
/// scores and their arithmetic mean on the record, and returns that mean.
double clip_image_score(ImageRecord& record, const Vocabulary& vocab, ProviderSession& session);

/// Mean of the scores, summed in ascending order so it does not depend on input order.
double order_independent_mean(std::span<const double> values);

struct ClipSelection {
    std::vector<ImageRecord> kept;
    std::vector<ImageRecord> dropped;
    SelectionReport report;
};

/// Keeps records whose clip_score is strictly above the mean of all scores.
/// Needs >= 2 scored records; throws DegenerateData when nothing is above the mean.
ClipSelection select_by_clip_score(std::vector<ImageRecord> records);

/// Mean of (1 - confidence) over the set pixels of `mask`. The confidence map
/// is at the resolution of `box`, which must contain the mask.
/// Throws DegenerateData for an empty mask.
double object_uncertainty(const Mask& mask, const BBox& box, const ConfidenceMap& confidence);

inline double object_uncertainty(const ObjectInstance& obj, const ConfidenceMap& confidence) {
    return object_uncertainty(obj.mask, obj.bbox, confidence);
}

struct UncertaintySelection {
    std::vector<ObjectInstance> kept;
    std::vector<ObjectInstance> dropped;
    SelectionReport report;
};

/// Per category, keeps the min(n, available) objects with the lowest
/// uncertainty, ties broken by ascending object id. Output is ordered by
/// (category, uncertainty, object id).
UncertaintySelection select_top_n_per_class(std::vector<ObjectInstance> objects, int n);

}  // namespace dreamforge
