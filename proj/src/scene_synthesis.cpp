#include "dreamforge/scene_synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"
#include "dreamforge/prompts.hpp"
#include "dreamforge/rle.hpp"
#include "dreamforge/stub_providers.hpp"

namespace dreamforge {

std::vector<Category> sample_classes(const Vocabulary& vocab, int max_classes, std::uint64_t seed) {
    if (vocab.empty()) throw ContractViolation("sample_classes: empty vocabulary");
    if (max_classes < 1) throw ContractViolation("sample_classes: max_classes must be >= 1");
    HashRng rng(hash_combine(seed, 0x5A3B1E));
    std::vector<Category> pool = vocab.categories();
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(max_classes), pool.size());
    const std::size_t k = 1 + rng.below(hi);
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(k);
    return pool;
}

Layout parse_induced_layout(std::string_view reply, const std::vector<Category>& class_sample, int canvas_width,
                            int canvas_height) {
    Json doc;
    try {
        doc = Json::parse(reply);
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("induction reply is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("objects") || !doc["objects"].is_array()) {
        throw ContractViolation("induction reply lacks an \"objects\" array");
    }
    Layout layout;
    layout.canvas_width = canvas_width;
    layout.canvas_height = canvas_height;
    for (const auto& obj : doc["objects"]) {
        if (!obj.is_object() || !obj.contains("class") || !obj["class"].is_string() || !obj.contains("box")) {
            throw ContractViolation("induction object needs \"class\" and \"box\"");
        }
        const std::string name = canonical_name(obj["class"].get<std::string>());
        auto cls = std::find_if(class_sample.begin(), class_sample.end(),
                                [&](const Category& c) { return canonical_name(c.name) == name; });
        if (cls == class_sample.end()) throw ContractViolation("induction emitted unrequested class '" + name + "'");
        const auto& box = obj["box"];
        if (!box.is_array() || box.size() != 4) throw ContractViolation("box must be [x, y, w, h]");
        double v[4];
        for (std::size_t i = 0; i < 4; ++i) {
            if (!box[i].is_number()) throw ContractViolation("box coordinates must be numbers");
            v[i] = box[i].get<double>();
            if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw ContractViolation("box coordinates must lie in [0, 1]");
        }
        const int x = static_cast<int>(std::floor(v[0] * canvas_width));
        const int y = static_cast<int>(std::floor(v[1] * canvas_height));
        const int w = std::min(static_cast<int>(std::floor(v[2] * canvas_width)), canvas_width - x);
        const int h = std::min(static_cast<int>(std::floor(v[3] * canvas_height)), canvas_height - y);
        layout.items.push_back(LayoutItem{cls->id, cls->name, BBox{x, y, w, h}});
    }
    return layout;
}

PlanOutcome plan_layout(const std::vector<Category>& class_sample, std::uint64_t seed, int canvas_width,
                        int canvas_height, int max_retries, ProviderSession& session) {
    if (class_sample.empty()) throw ContractViolation("plan_layout: empty class sample");
    std::vector<std::string> names;
    names.reserve(class_sample.size());
    for (const auto& c : class_sample) names.push_back(c.name);

    PlanOutcome out;
    std::string description = session.llm_complete(prompts::describe(names), seed);
    std::replace(description.begin(), description.end(), '\n', ' ');
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        ++out.induce_attempts;
        const std::string reply = session.llm_complete(prompts::induce(names, description, attempt), seed);
        try {
            Layout layout = parse_induced_layout(reply, class_sample, canvas_width, canvas_height);
            layout.description = description;
            layout.layout_id = layout_content_id(layout);
            out.layout = std::move(layout);
            return out;
        } catch (const ContractViolation& e) {
            out.parse_errors.emplace_back(e.what());
        }
    }
    return out;
}

std::optional<std::size_t> largest_candidate(const std::vector<MaskCandidate>& candidates) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!best || candidates[i].area > candidates[*best].area) best = i;
    }
    return best;
}

Mask clip_to_box(const Mask& mask, const BBox& box) {
    BitGrid local(box.w, box.h);
    mask.for_each_span([&](int row, int b, int e) {
        if (row < box.y || row >= box.y + box.h) return;
        for (int c = std::max(b, box.x); c < std::min(e, box.x + box.w); ++c) local.set(c - box.x, row - box.y);
    });
    return rle_encode_in_box(mask.width(), mask.height(), box, local);
}

AnnotationOutcome annotate_objects(const ImageHandle& image, const Layout& layout, std::int64_t first_object_id,
                                   ProviderSession& session) {
    AnnotationOutcome out;
    for (std::size_t i = 0; i < layout.items.size(); ++i) {
        const auto& item = layout.items[i];
        std::vector<MaskCandidate> candidates;
        try {
            candidates = session.propose_masks(image, item.box);
        } catch (const ProviderError& e) {
            out.failures.push_back("item " + std::to_string(i) + ": " + e.what());
            continue;
        }
        for (auto& c : candidates) {
            if (c.mask.width() != image.width || c.mask.height() != image.height) {
                c.area = 0;
                continue;
            }
            if (!mask_within_box(c.mask, item.box)) {
                c.mask = clip_to_box(c.mask, item.box);
                c.area = c.mask.area();
            }
        }
        std::erase_if(candidates, [](const MaskCandidate& c) { return c.area <= 0; });
        const auto best = largest_candidate(candidates);
        if (!best) {
            out.failures.push_back("item " + std::to_string(i) + ": no mask candidates");
            continue;
        }
        ObjectInstance obj;
        obj.object_id = ObjectId{first_object_id + static_cast<std::int64_t>(i)};
        obj.category_id = item.category_id;
        obj.bbox = item.box;
        obj.mask = std::move(candidates[*best].mask);
        obj.confidence_uri = std::move(candidates[*best].confidence_uri);
        out.objects.push_back(std::move(obj));
    }
    return out;
}

}  // namespace dreamforge
