#include "dreamforge/curation.hpp"

#include <algorithm>

#include "dreamforge/errors.hpp"

namespace dreamforge {

std::string_view to_string(SelectionStage s) noexcept { return s == SelectionStage::clip ? "clip" : "uncertainty"; }

void to_json(Json& j, const SelectionReport& r) {
    Json per_class = Json::object();
    for (const auto& [cls, n] : r.per_class_kept) per_class[std::to_string(cls)] = n;
    j = Json{{"stage", std::string(to_string(r.stage))},
             {"kept", r.kept},
             {"dropped", r.dropped},
             {"per_class_kept", per_class},
             {"threshold", r.threshold},
             {"kept_ids", r.kept_ids},
             {"dropped_ids", r.dropped_ids}};
}

void from_json(const Json& j, SelectionReport& r) {
    r.stage = j.at("stage").get<std::string>() == "clip" ? SelectionStage::clip : SelectionStage::uncertainty;
    r.kept = j.at("kept").get<std::size_t>();
    r.dropped = j.at("dropped").get<std::size_t>();
    r.per_class_kept.clear();
    for (const auto& [k, v] : j.at("per_class_kept").items()) r.per_class_kept[std::stoll(k)] = v.get<std::size_t>();
    r.threshold = j.at("threshold").get<double>();
    r.kept_ids = j.at("kept_ids").get<std::vector<std::pair<std::int64_t, double>>>();
    r.dropped_ids = j.at("dropped_ids").get<std::vector<std::pair<std::int64_t, double>>>();
}

double clip_image_score(ImageRecord& record, const Vocabulary& vocab, ProviderSession& session) {
    if (record.objects.empty()) throw ContractViolation("clip_image_score: record has no objects");
    const ImageHandle image{record.image_uri, record.width, record.height};
    double sum = 0.0;
    for (auto& obj : record.objects) {
        const Category* cat = vocab.find(obj.category_id);
        if (cat == nullptr) throw ContractViolation("clip_image_score: unknown category");
        obj.clip_score = session.score_crop(image, obj.bbox, cat->name);
        sum += *obj.clip_score;
    }
    record.clip_score = sum / static_cast<double>(record.objects.size());
    return *record.clip_score;
}

double order_independent_mean(std::span<const double> values) {
    if (values.empty()) throw DegenerateData("mean of an empty set");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    return sum / static_cast<double>(sorted.size());
}

ClipSelection select_by_clip_score(std::vector<ImageRecord> records) {
    if (records.size() < 2) throw ContractViolation("select_by_clip_score: needs at least 2 records");
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const auto& r : records) {
        if (!r.clip_score) throw ContractViolation("select_by_clip_score: record without clip score");
        scores.push_back(*r.clip_score);
    }
    ClipSelection out;
    out.report.stage = SelectionStage::clip;
    out.report.threshold = order_independent_mean(scores);
    for (auto& r : records) {
        const bool keep = *r.clip_score > out.report.threshold;
        auto& ids = keep ? out.report.kept_ids : out.report.dropped_ids;
        ids.emplace_back(r.image_id.value, *r.clip_score);
        if (keep) {
            for (const auto& o : r.objects) ++out.report.per_class_kept[o.category_id.value];
            out.kept.push_back(std::move(r));
        } else {
            out.dropped.push_back(std::move(r));
        }
    }
    out.report.kept = out.kept.size();
    out.report.dropped = out.dropped.size();
    if (out.kept.empty()) {
        throw DegenerateData("clip gate: all " + std::to_string(records.size()) + " image scores equal the mean");
    }
    return out;
}

double object_uncertainty(const Mask& mask, const BBox& box, const ConfidenceMap& confidence) {
    if (confidence.width != box.w || confidence.height != box.h) {
        throw ContractViolation("object_uncertainty: confidence map does not match the box");
    }
    double sum = 0.0;
    std::int64_t count = 0;
    mask.for_each_span([&](int row, int b, int e) {
        if (row < box.y || row >= box.y + box.h || b < box.x || e > box.x + box.w) {
            throw ContractViolation("object_uncertainty: mask pixel outside box");
        }
        const double* line = confidence.values.data() + static_cast<std::size_t>(row - box.y) * confidence.width;
        for (int c = b; c < e; ++c) sum += 1.0 - line[c - box.x];
        count += e - b;
    });
    if (count == 0) throw DegenerateData("object_uncertainty: empty mask");
    return sum / static_cast<double>(count);
}

UncertaintySelection select_top_n_per_class(std::vector<ObjectInstance> objects, int n) {
    if (n < 1) throw ContractViolation("select_top_n_per_class: n must be >= 1");
    for (const auto& o : objects) {
        if (!o.uncertainty) throw ContractViolation("select_top_n_per_class: object without uncertainty");
    }
    std::sort(objects.begin(), objects.end(), [](const ObjectInstance& a, const ObjectInstance& b) {
        if (a.category_id != b.category_id) return a.category_id < b.category_id;
        if (*a.uncertainty != *b.uncertainty) return *a.uncertainty < *b.uncertainty;
        return a.object_id < b.object_id;
    });
    UncertaintySelection out;
    out.report.stage = SelectionStage::uncertainty;
    out.report.threshold = n;
    std::size_t rank = 0;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        rank = (i > 0 && objects[i].category_id == objects[i - 1].category_id) ? rank + 1 : 0;
        auto& obj = objects[i];
        if (rank < static_cast<std::size_t>(n)) {
            ++out.report.per_class_kept[obj.category_id.value];
            out.report.kept_ids.emplace_back(obj.object_id.value, *obj.uncertainty);
            out.kept.push_back(std::move(obj));
        } else {
            out.report.dropped_ids.emplace_back(obj.object_id.value, *obj.uncertainty);
            out.dropped.push_back(std::move(obj));
        }
    }
    out.report.kept = out.kept.size();
    out.report.dropped = out.dropped.size();
    return out;
}

}  // namespace dreamforge
