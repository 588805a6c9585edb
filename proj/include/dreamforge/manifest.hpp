#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dreamforge/json_io.hpp"
#include "dreamforge/providers.hpp"

namespace dreamforge {

enum class StageStatus { pending, running, done, failed };

std::string_view to_string(StageStatus s) noexcept;
StageStatus parse_stage_status(std::string_view s);

struct StageEntry {
    std::string name;
    StageStatus status = StageStatus::pending;
    std::string output;        ///< path relative to the run directory
    std::string sha256;        ///< checksum of the output file once done
    std::string input_sha256;  ///< checksum of the previous stage's output
    Json summary = Json::object();

    bool operator==(const StageEntry&) const = default;
};

/// Decision about one item (layout, image, object) at one stage.
struct ItemRecord {
    std::string stage;
    std::string item;
    std::string decision;
    std::string detail;

    bool operator==(const ItemRecord&) const = default;
};

/// Persisted record of a synthesis run. Events, provider calls and item
/// records only ever grow; a stage marked done keeps its checksum.
/// Contains no wall-clock data, so identical runs give identical bytes.
class Manifest {
public:
    Manifest() = default;
    Manifest(std::string config_hash, std::vector<std::string> stage_names);

    const std::string& config_hash() const noexcept { return config_hash_; }
    const std::vector<StageEntry>& stages() const noexcept { return stages_; }
    const StageEntry& stage(const std::string& name) const;
    const std::vector<Json>& events() const noexcept { return events_; }
    const std::vector<Json>& calls() const noexcept { return calls_; }
    const std::vector<ItemRecord>& items() const noexcept { return items_; }

    void mark_running(const std::string& name, const std::string& input_sha256);
    /// Throws ContractViolation when the stage is already done.
    void mark_done(const std::string& name, const std::string& output, const std::string& sha256, Json summary);
    void mark_failed(const std::string& name, const std::string& reason);
    /// Records that a completed stage was reused on resume.
    void note_reused(const std::string& name);

    void append_calls(const std::string& stage, const std::vector<CallRecord>& calls);
    void append_items(std::vector<ItemRecord> items);
    void append_event(const std::string& stage, const std::string& event, const std::string& detail = {});

    Json to_json() const;
    static Manifest from_json(const Json& j);

    void save(const std::filesystem::path& path) const;
    static Manifest load(const std::filesystem::path& path);

    bool operator==(const Manifest&) const = default;

private:
    StageEntry& mutable_stage(const std::string& name);

    std::string config_hash_;
    std::vector<StageEntry> stages_;
    std::vector<Json> events_;
    std::vector<Json> calls_;
    std::vector<ItemRecord> items_;
};

/// Writes bytes atomically (temp file + rename).
void write_text_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace dreamforge
