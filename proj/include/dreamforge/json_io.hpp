#pragma once

// nlohmann::json adapters for the dataset model. Object keys are emitted in
// sorted order, so dumps are stable and safe to checksum.

#include "json.hpp"

#include "dreamforge/dataset.hpp"

namespace dreamforge {

using Json = nlohmann::json;

template <class Tag>
void to_json(Json& j, const Id<Tag>& id) {
    j = id.value;
}

template <class Tag>
void from_json(const Json& j, Id<Tag>& id) {
    id.value = j.get<std::int64_t>();
}

void to_json(Json& j, const Category& c);
void from_json(const Json& j, Category& c);
void to_json(Json& j, const Vocabulary& v);
void from_json(const Json& j, Vocabulary& v);

/// Boxes serialize as [x, y, w, h].
void to_json(Json& j, const BBox& b);
void from_json(const Json& j, BBox& b);

/// Masks serialize as {"size": [height, width], "counts": [runs...]}.
void to_json(Json& j, const Mask& m);
void from_json(const Json& j, Mask& m);

void to_json(Json& j, const ObjectInstance& o);
void from_json(const Json& j, ObjectInstance& o);
void to_json(Json& j, const ImageRecord& r);
void from_json(const Json& j, ImageRecord& r);

/// Canonical text used for every checksum: compact dump with sorted keys.
std::string canonical_dump(const Json& j);

}  // namespace dreamforge
