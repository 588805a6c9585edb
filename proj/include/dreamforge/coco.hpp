#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dreamforge/dataset.hpp"

namespace dreamforge {

struct CocoDataset {
    Vocabulary vocab;
    std::vector<ImageRecord> records;

    bool operator==(const CocoDataset&) const = default;
};

/// Serialized COCO-panoptic index and the SHA-256 of its exact bytes.
struct CocoExport {
    std::string json;
    std::string sha256;
};

/// Builds the panoptic-style index: "images", "categories", and one
/// "annotations" entry per image whose "segments_info" holds one RLE segment
/// per object. Throws ExportError on duplicate image ids or invalid records.
CocoExport export_coco_panoptic(const std::vector<ImageRecord>& records, const Vocabulary& vocab);

/// Parses an index produced by export_coco_panoptic.
CocoDataset import_coco_panoptic(const std::string& json);

/// Writes `path` plus a `path.sha256` sidecar; returns the checksum.
std::string write_coco_panoptic(const std::filesystem::path& path, const std::vector<ImageRecord>& records,
                                const Vocabulary& vocab);

/// Reads `path`; when the sidecar exists its checksum must match, else ExportError.
CocoDataset read_coco_panoptic(const std::filesystem::path& path);

}  // namespace dreamforge
