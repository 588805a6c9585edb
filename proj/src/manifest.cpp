#include "dreamforge/manifest.hpp"

#include <fstream>
#include <sstream>

#include "dreamforge/errors.hpp"

namespace dreamforge {

std::string_view to_string(StageStatus s) noexcept {
    switch (s) {
        case StageStatus::pending: return "pending";
        case StageStatus::running: return "running";
        case StageStatus::done: return "done";
        case StageStatus::failed: return "failed";
    }
    return "pending";
}

StageStatus parse_stage_status(std::string_view s) {
    if (s == "pending") return StageStatus::pending;
    if (s == "running") return StageStatus::running;
    if (s == "done") return StageStatus::done;
    if (s == "failed") return StageStatus::failed;
    throw ContractViolation("unknown stage status: " + std::string(s));
}

Manifest::Manifest(std::string config_hash, std::vector<std::string> stage_names)
    : config_hash_(std::move(config_hash)) {
    for (auto& n : stage_names) {
        StageEntry e;
        e.name = std::move(n);
        stages_.push_back(std::move(e));
    }
}

const StageEntry& Manifest::stage(const std::string& name) const {
    for (const auto& s : stages_) {
        if (s.name == name) return s;
    }
    throw ContractViolation("unknown stage " + name);
}

StageEntry& Manifest::mutable_stage(const std::string& name) {
    for (auto& s : stages_) {
        if (s.name == name) return s;
    }
    throw ContractViolation("unknown stage " + name);
}

void Manifest::mark_running(const std::string& name, const std::string& input_sha256) {
    auto& s = mutable_stage(name);
    if (s.status == StageStatus::done) throw ContractViolation("stage " + name + " already completed");
    s.status = StageStatus::running;
    s.input_sha256 = input_sha256;
    append_event(name, "started");
}

void Manifest::mark_done(const std::string& name, const std::string& output, const std::string& sha256, Json summary) {
    auto& s = mutable_stage(name);
    if (s.status == StageStatus::done) throw ContractViolation("stage " + name + " already completed");
    s.status = StageStatus::done;
    s.output = output;
    s.sha256 = sha256;
    s.summary = std::move(summary);
    append_event(name, "done", sha256);
}

void Manifest::mark_failed(const std::string& name, const std::string& reason) {
    auto& s = mutable_stage(name);
    if (s.status == StageStatus::done) throw ContractViolation("stage " + name + " already completed");
    s.status = StageStatus::failed;
    append_event(name, "failed", reason);
}

void Manifest::note_reused(const std::string& name) { append_event(name, "reused", stage(name).sha256); }

void Manifest::append_calls(const std::string& stage, const std::vector<CallRecord>& calls) {
    for (const auto& c : calls) {
        Json j = c;
        j["stage"] = stage;
        calls_.push_back(std::move(j));
    }
}

void Manifest::append_items(std::vector<ItemRecord> items) {
    for (auto& it : items) items_.push_back(std::move(it));
}

void Manifest::append_event(const std::string& stage, const std::string& event, const std::string& detail) {
    Json e{{"seq", events_.size()}, {"stage", stage}, {"event", event}};
    if (!detail.empty()) e["detail"] = detail;
    events_.push_back(std::move(e));
}

Json Manifest::to_json() const {
    Json stages = Json::array();
    for (const auto& s : stages_) {
        stages.push_back(Json{{"name", s.name},
                              {"status", std::string(to_string(s.status))},
                              {"output", s.output},
                              {"sha256", s.sha256},
                              {"input_sha256", s.input_sha256},
                              {"summary", s.summary}});
    }
    Json items = Json::array();
    for (const auto& it : items_) {
        Json ji{{"stage", it.stage}, {"item", it.item}, {"decision", it.decision}};
        if (!it.detail.empty()) ji["detail"] = it.detail;
        items.push_back(std::move(ji));
    }
    return Json{{"version", "manifest/v1"},
                {"config_hash", config_hash_},
                {"stages", std::move(stages)},
                {"events", events_},
                {"provider_calls", calls_},
                {"items", std::move(items)}};
}

Manifest Manifest::from_json(const Json& j) {
    if (j.value("version", std::string{}) != "manifest/v1") throw ContractViolation("unknown manifest version");
    Manifest m;
    m.config_hash_ = j.at("config_hash").get<std::string>();
    for (const auto& s : j.at("stages")) {
        m.stages_.push_back(StageEntry{s.at("name").get<std::string>(),
                                       parse_stage_status(s.at("status").get<std::string>()),
                                       s.value("output", std::string{}), s.value("sha256", std::string{}),
                                       s.value("input_sha256", std::string{}), s.value("summary", Json::object())});
    }
    m.events_ = j.at("events").get<std::vector<Json>>();
    m.calls_ = j.at("provider_calls").get<std::vector<Json>>();
    for (const auto& it : j.at("items")) {
        m.items_.push_back(ItemRecord{it.at("stage").get<std::string>(), it.at("item").get<std::string>(),
                                      it.at("decision").get<std::string>(), it.value("detail", std::string{})});
    }
    return m;
}

void Manifest::save(const std::filesystem::path& path) const { write_text_file(path, to_json().dump(1) + "\n"); }

Manifest Manifest::load(const std::filesystem::path& path) {
    try {
        return from_json(Json::parse(read_text_file(path)));
    } catch (const Json::exception& e) {
        throw ContractViolation("malformed manifest " + path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << bytes;
        if (!out.flush()) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace dreamforge
