#include "dreamforge/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <omp.h>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"
#include "dreamforge/http_providers.hpp"
#include "dreamforge/layout.hpp"
#include "dreamforge/scene_synthesis.hpp"
#include "dreamforge/vocabulary.hpp"

namespace dreamforge {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kObjectsPerImageSlot = 100;

struct StageOutput {
    Json data;
    Json summary = Json::object();
    std::vector<CallRecord> calls;
    std::vector<ItemRecord> items;
};

struct Context {
    const PipelineConfig& config;
    const ProviderSet& providers;
    RunPaths paths;
    std::map<std::string, Json> data;
    int workers = 1;

    const Json& stage(const std::string& name) const { return data.at(name); }
    Vocabulary vocab() const { return stage("cna").at("vocabulary").get<Vocabulary>(); }
};

// Runs fn(i) for every index; the exception of the lowest failing index wins.
template <class Fn>
void for_each_index(std::size_t n, int workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void merge_calls(std::vector<CallRecord>& into, std::vector<std::vector<CallRecord>>& logs) {
    for (auto& log : logs) {
        for (auto& c : log) into.push_back(std::move(c));
    }
}

std::uint64_t item_seed(std::uint64_t seed, std::string_view stage, std::size_t index) {
    return hash_combine(hash_combine(seed, fnv1a(stage)), index);
}

// A rejected request skips the item; a provider that stays unreachable fails the stage.
[[noreturn]] void rethrow_unreachable(const std::string& stage, const ProviderError& e) {
    throw StageFailure(stage, e.what());
}

StageOutput stage_cna(Context& ctx) {
    const auto& cfg = ctx.config;
    Vocabulary train;
    for (const auto& name : cfg.train_categories) train.add(name, Origin::train);

    ExpansionResult expansion = expand_vocabulary(train, cfg.k_runs, cfg.seed, ctx.providers);
    auto consensus = consensus_filter(expansion.candidates, cfg.min_hits);
    DedupResult dedup = semantic_dedup(consensus, train, cfg.tau_dedup, ctx.providers);

    StageOutput out;
    out.calls = std::move(expansion.calls);
    for (auto& c : dedup.calls) out.calls.push_back(std::move(c));
    for (const auto& d : dedup.decisions) {
        out.items.push_back({"cna", "name:" + d.name, d.accepted ? "accepted" : "dropped", d.reason});
    }
    for (const auto& c : expansion.candidates) {
        if (static_cast<int>(c.run_hits.size()) < cfg.min_hits) {
            out.items.push_back({"cna", "name:" + c.name, "dropped", "below-consensus"});
        }
    }
    std::size_t good_runs = 0;
    for (const auto& r : expansion.runs) good_runs += r.ok ? 1 : 0;
    const std::size_t novel = dedup.vocab.with_origin(Origin::novel).size();
    out.summary = Json{{"train_categories", train.size()},
                       {"candidates", expansion.candidates.size()},
                       {"consensus", consensus.size()},
                       {"novel_categories", novel},
                       {"successful_runs", good_runs},
                       {"runs", expansion.runs.size()}};
    out.data = Json{{"vocabulary", dedup.vocab},
                    {"document", vocabulary_document(dedup, expansion, cfg.min_hits)}};
    return out;
}

StageOutput stage_layouts(Context& ctx) {
    const auto& cfg = ctx.config;
    const Vocabulary vocab = ctx.vocab();
    const LayoutLimits limits{cfg.overlap_max, cfg.min_box_px, cfg.max_objects};
    const auto n = static_cast<std::size_t>(cfg.num_layouts);

    std::vector<Json> entries(n);
    std::vector<std::vector<CallRecord>> logs(n);
    for_each_index(n, ctx.workers, [&](std::size_t i) {
        ProviderSession session(ctx.providers);
        const std::uint64_t seed = item_seed(cfg.seed, "layouts", i);
        Json entry{{"index", i}};
        try {
            const auto sample = sample_classes(vocab, cfg.max_objects, seed);
            PlanOutcome plan = plan_layout(sample, seed, cfg.canvas_width, cfg.canvas_height, cfg.layout_retries,
                                           session);
            entry["induce_attempts"] = plan.induce_attempts;
            if (!plan.layout) {
                entry["status"] = "unparsed";
                entry["reason"] = plan.parse_errors.empty() ? std::string("no reply") : plan.parse_errors.back();
            } else {
                const LayoutVerdict verdict = validate_layout(*plan.layout, limits, &vocab);
                entry["status"] = verdict.accepted() ? "accepted" : "rejected";
                if (!verdict.accepted()) {
                    entry["reason"] = std::string(to_string(verdict.reason)) + ": " + verdict.detail;
                }
                entry["layout"] = *plan.layout;
            }
        } catch (const ProviderError& e) {
            if (e.retryable()) rethrow_unreachable("layouts", e);
            entry["status"] = "provider-rejected";
            entry["reason"] = e.what();
        }
        entries[i] = std::move(entry);
        logs[i] = session.take_log();
    });

    StageOutput out;
    merge_calls(out.calls, logs);
    std::map<std::string, std::size_t> counts;
    for (const auto& e : entries) {
        const std::string status = e.at("status").get<std::string>();
        ++counts[status];
        out.items.push_back({"layouts", "layout:" + std::to_string(e.at("index").get<std::size_t>()), status,
                             e.value("reason", std::string{})});
    }
    out.summary = Json{{"planned", n}, {"accepted", counts["accepted"]}, {"status_counts", counts}};
    out.data = Json{{"layouts", entries}};
    return out;
}

StageOutput stage_images(Context& ctx) {
    const auto& cfg = ctx.config;
    std::vector<std::pair<std::size_t, Layout>> accepted;
    for (const auto& e : ctx.stage("layouts").at("layouts")) {
        if (e.at("status") == "accepted") accepted.emplace_back(e.at("index").get<std::size_t>(), e.at("layout").get<Layout>());
    }

    const std::size_t n = accepted.size();
    std::vector<std::optional<ImageRecord>> records(n);
    std::vector<std::string> failures(n);
    std::vector<std::vector<CallRecord>> logs(n);
    for_each_index(n, ctx.workers, [&](std::size_t k) {
        ProviderSession session(ctx.providers);
        const auto& [index, layout] = accepted[k];
        try {
            GeneratedImage gen = session.generate_image(layout, item_seed(cfg.seed, "images", index));
            ImageRecord rec;
            rec.image_id = ImageId{static_cast<std::int64_t>(index) + 1};
            rec.width = gen.image.width;
            rec.height = gen.image.height;
            rec.source = Source::synthetic;
            rec.image_uri = gen.image.uri;
            rec.layout_id = layout.layout_id;
            for (std::size_t j = 0; j < layout.items.size(); ++j) {
                ObjectInstance obj;
                obj.object_id = ObjectId{rec.image_id.value * kObjectsPerImageSlot + static_cast<std::int64_t>(j)};
                obj.category_id = layout.items[j].category_id;
                obj.bbox = layout.items[j].box;
                obj.mask = Mask::empty(rec.width, rec.height);
                rec.objects.push_back(std::move(obj));
            }
            records[k] = std::move(rec);
        } catch (const ProviderError& e) {
            if (e.retryable()) rethrow_unreachable("images", e);
            failures[k] = e.what();
        }
        logs[k] = session.take_log();
    });

    StageOutput out;
    merge_calls(out.calls, logs);
    Json list = Json::array();
    for (std::size_t k = 0; k < n; ++k) {
        const std::string item = "layout:" + std::to_string(accepted[k].first);
        if (records[k]) {
            out.items.push_back({"images", item, "generated", "image:" + std::to_string(records[k]->image_id.value)});
            list.push_back(*records[k]);
        } else {
            out.items.push_back({"images", item, "skipped", failures[k]});
        }
    }
    out.summary = Json{{"layouts", n}, {"generated", list.size()}};
    out.data = Json{{"records", std::move(list)}};
    return out;
}

StageOutput stage_clip_gate(Context& ctx) {
    const Vocabulary vocab = ctx.vocab();
    auto records = ctx.stage("images").at("records").get<std::vector<ImageRecord>>();
    const std::size_t n = records.size();
    std::vector<std::vector<CallRecord>> logs(n);
    for_each_index(n, ctx.workers, [&](std::size_t i) {
        ProviderSession session(ctx.providers);
        try {
            clip_image_score(records[i], vocab, session);
        } catch (const ProviderError& e) {
            rethrow_unreachable("clip_gate", e);
        }
        logs[i] = session.take_log();
    });

    StageOutput out;
    merge_calls(out.calls, logs);
    ClipSelection sel;
    if (!ctx.config.clip_gate) {
        sel.report.stage = SelectionStage::clip;
        for (auto& r : records) {
            sel.report.kept_ids.emplace_back(r.image_id.value, r.clip_score.value_or(0.0));
            for (const auto& o : r.objects) ++sel.report.per_class_kept[o.category_id.value];
        }
        sel.report.kept = records.size();
        sel.kept = std::move(records);
    } else {
        if (n < 2) throw DegenerateData("clip gate needs at least 2 generated images, got " + std::to_string(n));
        sel = select_by_clip_score(std::move(records));
    }
    for (const auto& [id, score] : sel.report.kept_ids) {
        out.items.push_back({"clip_gate", "image:" + std::to_string(id), "kept", std::to_string(score)});
    }
    for (const auto& [id, score] : sel.report.dropped_ids) {
        out.items.push_back({"clip_gate", "image:" + std::to_string(id), "dropped", std::to_string(score)});
    }
    out.summary = Json{{"input", sel.report.kept + sel.report.dropped},
                       {"kept", sel.report.kept},
                       {"threshold", sel.report.threshold},
                       {"enabled", ctx.config.clip_gate}};
    out.data = Json{{"records", sel.kept}, {"report", sel.report}};
    return out;
}

Layout layout_of(const ImageRecord& rec) {
    Layout layout;
    layout.canvas_width = rec.width;
    layout.canvas_height = rec.height;
    for (const auto& o : rec.objects) layout.items.push_back(LayoutItem{o.category_id, {}, o.bbox});
    return layout;
}

StageOutput stage_masks(Context& ctx) {
    auto records = ctx.stage("clip_gate").at("records").get<std::vector<ImageRecord>>();
    const std::size_t n = records.size();
    std::vector<std::vector<std::string>> failures(n);
    std::vector<std::vector<CallRecord>> logs(n);
    for_each_index(n, ctx.workers, [&](std::size_t i) {
        ProviderSession session(ctx.providers);
        auto& rec = records[i];
        const ImageHandle image{rec.image_uri, rec.width, rec.height};
        AnnotationOutcome ann;
        try {
            ann = annotate_objects(image, layout_of(rec), rec.image_id.value * kObjectsPerImageSlot, session);
        } catch (const ProviderError& e) {
            rethrow_unreachable("masks", e);
        }
        for (auto& obj : ann.objects) {
            const auto it = std::find_if(rec.objects.begin(), rec.objects.end(),
                                         [&](const ObjectInstance& o) { return o.object_id == obj.object_id; });
            if (it != rec.objects.end()) obj.clip_score = it->clip_score;
        }
        rec.objects = std::move(ann.objects);
        failures[i] = std::move(ann.failures);
        logs[i] = session.take_log();
    });

    StageOutput out;
    merge_calls(out.calls, logs);
    std::size_t objects = 0;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string image = "image:" + std::to_string(records[i].image_id.value);
        for (const auto& o : records[i].objects) {
            out.items.push_back({"masks", "object:" + std::to_string(o.object_id.value), "annotated", {}});
        }
        for (const auto& f : failures[i]) out.items.push_back({"masks", image, "omitted", f});
        objects += records[i].objects.size();
        failed += failures[i].size();
    }
    out.summary = Json{{"images", n}, {"objects", objects}, {"omitted", failed}};
    out.data = Json{{"records", std::move(records)}};
    return out;
}

StageOutput stage_uncertainty_gate(Context& ctx) {
    const auto& cfg = ctx.config;
    const Vocabulary vocab = ctx.vocab();
    auto records = ctx.stage("masks").at("records").get<std::vector<ImageRecord>>();
    const std::size_t n = records.size();
    std::vector<std::vector<CallRecord>> logs(n);
    for_each_index(n, ctx.workers, [&](std::size_t i) {
        ProviderSession session(ctx.providers);
        for (auto& obj : records[i].objects) {
            try {
                const ConfidenceMap conf = session.fetch_confidence(obj.confidence_uri);
                obj.uncertainty = object_uncertainty(obj, conf);
            } catch (const ProviderError& e) {
                rethrow_unreachable("uncertainty_gate", e);
            }
        }
        logs[i] = session.take_log();
    });

    std::vector<ObjectInstance> objects;
    for (const auto& r : records) objects.insert(objects.end(), r.objects.begin(), r.objects.end());
    const int cap = cfg.effective_per_class_cap(vocab.size());
    UncertaintySelection sel = select_top_n_per_class(std::move(objects), cap);

    std::set<ObjectId> kept;
    for (const auto& o : sel.kept) kept.insert(o.object_id);
    Json final_records = Json::array();
    for (auto& r : records) {
        std::erase_if(r.objects, [&](const ObjectInstance& o) { return !kept.contains(o.object_id); });
        if (!r.objects.empty()) final_records.push_back(r);
    }

    StageOutput out;
    merge_calls(out.calls, logs);
    for (const auto& [id, s] : sel.report.kept_ids) {
        out.items.push_back({"uncertainty_gate", "object:" + std::to_string(id), "kept", std::to_string(s)});
    }
    for (const auto& [id, s] : sel.report.dropped_ids) {
        out.items.push_back({"uncertainty_gate", "object:" + std::to_string(id), "dropped", std::to_string(s)});
    }
    out.summary = Json{{"input", sel.report.kept + sel.report.dropped},
                       {"kept", sel.report.kept},
                       {"per_class_cap", cap},
                       {"images", final_records.size()}};
    out.data = Json{{"records", std::move(final_records)}, {"report", sel.report}};
    return out;
}

StageOutput stage_export(Context& ctx) {
    const Vocabulary vocab = ctx.vocab();
    const auto records = ctx.stage("uncertainty_gate").at("records").get<std::vector<ImageRecord>>();
    const std::string sha = write_coco_panoptic(ctx.paths.dataset(), records, vocab);
    write_text_file(ctx.paths.vocabulary(), ctx.stage("cna").at("document").dump(1) + "\n");
    write_text_file(ctx.paths.reports() / "clip_gate.json", ctx.stage("clip_gate").at("report").dump(1) + "\n");
    write_text_file(ctx.paths.reports() / "uncertainty_gate.json",
                    ctx.stage("uncertainty_gate").at("report").dump(1) + "\n");

    std::size_t objects = 0;
    for (const auto& r : records) objects += r.objects.size();
    StageOutput out;
    out.summary = Json{{"images", records.size()}, {"objects", objects}, {"dataset_sha256", sha}};
    out.data = Json{{"dataset", fs::relative(ctx.paths.dataset(), ctx.paths.root).generic_string()},
                    {"dataset_sha256", sha},
                    {"images", records.size()},
                    {"objects", objects}};
    return out;
}

using StageFn = StageOutput (*)(Context&);

const std::vector<StageFn>& stage_functions() {
    static const std::vector<StageFn> fns{stage_cna,   stage_layouts,          stage_images, stage_clip_gate,
                                          stage_masks, stage_uncertainty_gate, stage_export};
    return fns;
}

std::string file_sha(const fs::path& path) { return sha256_hex(read_text_file(path)); }

}  // namespace

const std::vector<std::string>& synthesis_stages() {
    static const std::vector<std::string> names{"cna",   "layouts",          "images", "clip_gate",
                                                "masks", "uncertainty_gate", "export"};
    return names;
}

fs::path RunPaths::stage_file(std::size_t index, const std::string& name) const {
    return root / "stages" / (std::to_string(index + 1) + "_" + name + ".json");
}

SynthesisResult run_synthesis(const PipelineConfig& config, const ProviderSet& providers, const RunOptions& options) {
    config.validate();
    const auto& names = synthesis_stages();
    if (options.halt_after && std::find(names.begin(), names.end(), *options.halt_after) == names.end()) {
        throw ConfigError("unknown stage '" + *options.halt_after + "'");
    }

    Context ctx{config, providers, RunPaths{config.output_dir}, {}, 1};
    ctx.workers = config.max_workers > 0 ? config.max_workers : omp_get_max_threads();
    const std::string config_hash = config.hash();

    SynthesisResult result;
    result.manifest_path = ctx.paths.manifest();
    Manifest& manifest = result.manifest;
    if (options.resume && fs::exists(result.manifest_path)) {
        manifest = Manifest::load(result.manifest_path);
        if (manifest.config_hash() != config_hash) {
            throw ConfigError("config hash " + config_hash + " does not match the manifest's " +
                              manifest.config_hash() + "; start a fresh run instead of resuming");
        }
    } else {
        manifest = Manifest(config_hash, names);
    }
    fs::create_directories(ctx.paths.root);

    std::string previous_sha = config_hash;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string& name = names[i];
        const fs::path file = ctx.paths.stage_file(i, name);
        const std::string rel = fs::relative(file, ctx.paths.root).generic_string();
        const StageEntry& entry = manifest.stage(name);

        if (entry.status == StageStatus::done) {
            if (!fs::exists(file) || file_sha(file) != entry.sha256) {
                throw StageFailure(name, "completed output " + rel + " is missing or modified; start a fresh run");
            }
            if (entry.input_sha256 != previous_sha) {
                throw StageFailure(name, "recorded input checksum does not match the previous stage");
            }
            ctx.data[name] = Json::parse(read_text_file(file));
            manifest.note_reused(name);
            previous_sha = entry.sha256;
            continue;
        }

        manifest.mark_running(name, previous_sha);
        StageOutput out;
        try {
            out = stage_functions()[i](ctx);
        } catch (const Error& e) {
            manifest.mark_failed(name, e.what());
            manifest.save(result.manifest_path);
            if (dynamic_cast<const StageFailure*>(&e) != nullptr || dynamic_cast<const DegenerateData*>(&e) != nullptr ||
                dynamic_cast<const ConfigError*>(&e) != nullptr) {
                throw;
            }
            throw StageFailure(name, e.what());
        }
        const std::string bytes = out.data.dump(1) + "\n";
        write_text_file(file, bytes);
        const std::string sha = sha256_hex(bytes);
        manifest.append_calls(name, out.calls);
        manifest.append_items(std::move(out.items));
        manifest.mark_done(name, rel, sha, std::move(out.summary));
        manifest.save(result.manifest_path);
        ctx.data[name] = std::move(out.data);
        previous_sha = sha;

        if (options.halt_after && *options.halt_after == name && i + 1 < names.size()) {
            result.halted = true;
            return result;
        }
    }

    const Json& exported = ctx.data.at("export");
    result.dataset_path = ctx.paths.root / exported.at("dataset").get<std::string>();
    result.dataset_sha256 = exported.at("dataset_sha256").get<std::string>();
    result.images = exported.at("images").get<std::size_t>();
    result.objects = exported.at("objects").get<std::size_t>();
    emit_report(result.manifest_path);
    return result;
}

SynthesisResult run_synthesis(const PipelineConfig& config, const RunOptions& options) {
    const ProviderSet providers = make_providers(config.providers, config.seed);
    return run_synthesis(config, providers, options);
}

namespace {

double rate(std::size_t kept, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(total);
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

}  // namespace

RunReport build_report(const Manifest& manifest, const std::vector<SelectionReport>& reports,
                       const Json& training_summary) {
    auto summary_of = [&](const std::string& name) -> Json {
        for (const auto& s : manifest.stages()) {
            if (s.name == name && s.status == StageStatus::done) return s.summary;
        }
        return Json::object();
    };
    const Json cna = summary_of("cna");
    const std::size_t train = cna.value("train_categories", std::size_t{0});
    const std::size_t novel = cna.value("novel_categories", std::size_t{0});

    Json stages = Json::array();
    for (const auto& s : manifest.stages()) {
        stages.push_back(Json{{"name", s.name}, {"status", std::string(to_string(s.status))}});
    }
    Json gates = Json::array();
    std::map<std::int64_t, std::size_t> final_counts;
    for (const auto& r : reports) {
        gates.push_back(Json{{"stage", std::string(to_string(r.stage))},
                             {"kept", r.kept},
                             {"dropped", r.dropped},
                             {"keep_rate", rate(r.kept, r.kept + r.dropped)},
                             {"threshold", r.threshold}});
        if (r.stage == SelectionStage::uncertainty) final_counts = r.per_class_kept;
    }
    Json per_class = Json::object();
    for (const auto& [cls, n] : final_counts) per_class[std::to_string(cls)] = n;

    RunReport out;
    out.summary = Json{{"config_hash", manifest.config_hash()},
                       {"vocabulary", {{"train", train}, {"novel", novel}, {"total", train + novel}}},
                       {"stages", stages},
                       {"gates", gates},
                       {"per_class_objects", per_class},
                       {"provider_calls", manifest.calls().size()}};
    if (!training_summary.is_null()) out.summary["training"] = training_summary;

    std::ostringstream md;
    md << "# dreamforge run report\n\n";
    md << "Config hash: `" << manifest.config_hash() << "`\n\n";
    md << "## Vocabulary\n\n| train | novel | total |\n|---|---|---|\n";
    md << "| " << train << " | " << novel << " | " << train + novel << " |\n\n";
    md << "## Stages\n\n| stage | status |\n|---|---|\n";
    for (const auto& s : manifest.stages()) md << "| " << s.name << " | " << to_string(s.status) << " |\n";
    md << "\n## Gates\n\n| gate | kept | dropped | keep rate | threshold |\n|---|---|---|---|---|\n";
    if (reports.empty()) md << "| - | 0 | 0 | 0.0000 | 0.0000 |\n";
    for (const auto& r : reports) {
        md << "| " << to_string(r.stage) << " | " << r.kept << " | " << r.dropped << " | "
           << fixed(rate(r.kept, r.kept + r.dropped)) << " | " << fixed(r.threshold) << " |\n";
    }
    md << "\n## Objects per class\n\n| category | objects |\n|---|---|\n";
    if (final_counts.empty()) md << "| - | 0 |\n";
    for (const auto& [cls, n] : final_counts) md << "| " << cls << " | " << n << " |\n";
    md << "\nProvider calls: " << manifest.calls().size() << "\n";
    if (!training_summary.is_null()) {
        md << "\n## Training simulation\n\n";
        for (const auto& [k, v] : training_summary.items()) md << "- " << k << ": " << v.dump() << "\n";
    }
    out.markdown = md.str();
    return out;
}

RunReport emit_report(const fs::path& manifest_path) {
    const Manifest manifest = Manifest::load(manifest_path);
    const fs::path root = manifest_path.parent_path();
    std::vector<SelectionReport> reports;
    for (const char* name : {"clip_gate", "uncertainty_gate"}) {
        const fs::path p = root / "reports" / (std::string(name) + ".json");
        if (fs::exists(p)) reports.push_back(Json::parse(read_text_file(p)).get<SelectionReport>());
    }
    Json training;
    if (const fs::path p = root / "training" / "summary.json"; fs::exists(p)) training = Json::parse(read_text_file(p));
    RunReport report = build_report(manifest, reports, training);
    write_text_file(root / "report.md", report.markdown);
    write_text_file(root / "report.json", report.summary.dump(1) + "\n");
    return report;
}

}  // namespace dreamforge
