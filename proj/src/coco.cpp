#include "dreamforge/coco.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"
#include "dreamforge/json_io.hpp"

namespace dreamforge {

namespace {

constexpr const char* kFormat = "dreamforge-coco-panoptic";
constexpr int kFormatVersion = 1;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ExportError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExportError("cannot write " + path.string());
    out << bytes;
}

}  // namespace

CocoExport export_coco_panoptic(const std::vector<ImageRecord>& records, const Vocabulary& vocab) {
    Json images = Json::array();
    Json annotations = Json::array();
    std::set<std::int64_t> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.image_id.value).second) {
            throw ExportError("duplicate image_id " + std::to_string(r.image_id.value));
        }
        if (auto problems = validate_record(r, vocab); !problems.empty()) throw ExportError(problems.front());
        Json img = r;
        img.erase("objects");
        images.push_back(std::move(img));
        annotations.push_back(Json{{"image_id", r.image_id}, {"file_name", r.image_uri}, {"segments_info", r.objects}});
    }
    Json categories = Json::array();
    for (const auto& c : vocab.categories()) {
        Json jc = c;
        jc["isthing"] = 1;
        categories.push_back(std::move(jc));
    }
    Json doc{{"info", {{"format", kFormat}, {"version", kFormatVersion}}},
             {"images", std::move(images)},
             {"categories", std::move(categories)},
             {"annotations", std::move(annotations)}};
    CocoExport out;
    out.json = canonical_dump(doc);
    out.sha256 = sha256_hex(out.json);
    return out;
}

CocoDataset import_coco_panoptic(const std::string& json) {
    Json doc;
    try {
        doc = Json::parse(json);
    } catch (const Json::exception& e) {
        throw ExportError(std::string("malformed dataset json: ") + e.what());
    }
    if ((doc.contains("info") ? doc["info"].value("format", std::string{}) : std::string{}) != kFormat) {
        throw ExportError("not a dreamforge panoptic index");
    }
    CocoDataset ds;
    try {
        for (const auto& jc : doc.at("categories")) ds.vocab.add(jc.get<Category>());
        std::map<std::int64_t, const Json*> segments;
        for (const auto& ann : doc.at("annotations")) {
            segments[ann.at("image_id").get<std::int64_t>()] = &ann.at("segments_info");
        }
        for (const auto& img : doc.at("images")) {
            Json full = img;
            const auto id = img.at("id").get<std::int64_t>();
            auto it = segments.find(id);
            full["objects"] = it == segments.end() ? Json::array() : *it->second;
            ds.records.push_back(full.get<ImageRecord>());
        }
    } catch (const Json::exception& e) {
        throw ExportError(std::string("malformed dataset json: ") + e.what());
    }
    return ds;
}

std::string write_coco_panoptic(const std::filesystem::path& path, const std::vector<ImageRecord>& records,
                                const Vocabulary& vocab) {
    const CocoExport out = export_coco_panoptic(records, vocab);
    write_file(path, out.json);
    write_file(path.string() + ".sha256", out.sha256 + "\n");
    return out.sha256;
}

CocoDataset read_coco_panoptic(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    const std::filesystem::path sidecar = path.string() + ".sha256";
    if (std::filesystem::exists(sidecar)) {
        std::string expected = read_file(sidecar);
        while (!expected.empty() && (expected.back() == '\n' || expected.back() == '\r')) expected.pop_back();
        if (expected != sha256_hex(bytes)) throw ExportError("checksum mismatch for " + path.string());
    }
    return import_coco_panoptic(bytes);
}

}  // namespace dreamforge
