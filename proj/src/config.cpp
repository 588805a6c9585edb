#include "dreamforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"

namespace dreamforge {

namespace {

Json endpoint_json(const ProviderEndpoint& ep) {
    return Json{{"base_url", ep.base_url}, {"timeout_s", ep.timeout_s}, {"retries", ep.retries}};
}

std::string env_name(ProviderKind k) {
    std::string s = "DREAMFORGE_";
    for (char c : to_string(k)) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return s + "_URL";
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const Json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

void PipelineConfig::validate() const {
    require(!train_categories.empty(), "train_categories must not be empty");
    require(k_runs >= 1 && k_runs <= 50, "k_runs must be in [1, 50]");
    require(min_hits >= 2 && min_hits <= k_runs, "min_hits must be in [2, k_runs]");
    require(tau_dedup > 0.0 && tau_dedup < 1.0, "tau_dedup must be in (0, 1)");
    require(num_layouts >= 2, "num_layouts must be >= 2");
    require(max_objects >= 1 && max_objects <= 64, "max_objects must be in [1, 64]");
    require(overlap_max >= 0.0 && overlap_max < 1.0, "overlap_max must be in [0, 1)");
    require(min_box_px >= 1, "min_box_px must be >= 1");
    require(canvas_width >= min_box_px && canvas_height >= min_box_px, "canvas smaller than min_box_px");
    require(layout_retries >= 0, "layout_retries must be >= 0");
    require(per_class_cap >= 0, "per_class_cap must be >= 0");
    require(target_objects >= 1, "target_objects must be >= 1");
    require(steps >= 1, "steps must be >= 1");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(objects_per_image >= 1, "objects_per_image must be >= 1");
    require(lambda >= 0.0, "lambda must be >= 0");
    require(bank_capacity >= 1, "bank_capacity must be >= 1");
    require(feature_dim >= 1 && projection_dim >= 1, "feature dimensions must be >= 1");
    require(learning_rate > 0.0, "learning_rate must be > 0");
    require(domain_gap >= 0.0, "domain_gap must be >= 0");
    require(real_images >= 1, "real_images must be >= 1");
    require(max_workers >= 0, "max_workers must be >= 0");
    std::set<std::string> names;
    for (const auto& n : train_categories) {
        require(!canonical_name(n).empty(), "train category names must be non-empty");
        require(names.insert(canonical_name(n)).second, "duplicate train category '" + n + "'");
    }
    for (std::size_t i = 0; i < providers.size(); ++i) {
        require(providers[i].kind == static_cast<ProviderKind>(i), "provider endpoints out of order");
        providers[i].validate();
    }
}

int PipelineConfig::effective_per_class_cap(std::size_t num_categories) const {
    if (per_class_cap > 0) return per_class_cap;
    const auto n = static_cast<std::int64_t>(std::max<std::size_t>(num_categories, 1));
    return static_cast<int>((target_objects + n - 1) / n);
}

std::string PipelineConfig::hash() const {
    Json j = *this;
    j.erase("output_dir");
    return sha256_hex(canonical_dump(j));
}

void to_json(Json& j, const PipelineConfig& c) {
    Json providers = Json::object();
    for (const auto& ep : c.providers) providers[std::string(to_string(ep.kind))] = endpoint_json(ep);
    j = Json{{"seed", c.seed},
             {"output_dir", c.output_dir.string()},
             {"train_categories", c.train_categories},
             {"cna", {{"k_runs", c.k_runs}, {"min_hits", c.min_hits}, {"tau_dedup", c.tau_dedup}}},
             {"synthesis",
              {{"num_layouts", c.num_layouts},
               {"max_objects", c.max_objects},
               {"overlap_max", c.overlap_max},
               {"min_box_px", c.min_box_px},
               {"canvas", Json::array({c.canvas_width, c.canvas_height})},
               {"layout_retries", c.layout_retries}}},
             {"curation",
              {{"clip_gate", c.clip_gate}, {"per_class_cap", c.per_class_cap}, {"target_objects", c.target_objects}}},
             {"training",
              {{"steps", c.steps},
               {"batch_size", c.batch_size},
               {"objects_per_image", c.objects_per_image},
               {"lambda", c.lambda},
               {"bank_capacity", c.bank_capacity},
               {"feature_dim", c.feature_dim},
               {"projection_dim", c.projection_dim},
               {"learning_rate", c.learning_rate},
               {"domain_gap", c.domain_gap},
               {"surrogate_seg_loss", c.surrogate_seg_loss},
               {"real_images", c.real_images}}},
             {"max_workers", c.max_workers},
             {"providers", providers}};
}

void from_json(const Json& j, PipelineConfig& c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> top{"seed",     "output_dir", "train_categories", "cna",       "synthesis",
                                           "curation", "training",   "max_workers",      "providers"};
    for (const auto& [key, _] : j.items()) {
        if (!top.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    read(j, "seed", c.seed);
    if (auto it = j.find("output_dir"); it != j.end()) c.output_dir = it->get<std::string>();
    read(j, "train_categories", c.train_categories);
    read(j, "max_workers", c.max_workers);
    if (auto it = j.find("cna"); it != j.end()) {
        read(*it, "k_runs", c.k_runs);
        read(*it, "min_hits", c.min_hits);
        read(*it, "tau_dedup", c.tau_dedup);
    }
    if (auto it = j.find("synthesis"); it != j.end()) {
        read(*it, "num_layouts", c.num_layouts);
        read(*it, "max_objects", c.max_objects);
        read(*it, "overlap_max", c.overlap_max);
        read(*it, "min_box_px", c.min_box_px);
        read(*it, "layout_retries", c.layout_retries);
        if (auto cv = it->find("canvas"); cv != it->end()) {
            if (!cv->is_array() || cv->size() != 2) throw ConfigError("synthesis.canvas must be [width, height]");
            c.canvas_width = cv->at(0).get<int>();
            c.canvas_height = cv->at(1).get<int>();
        }
    }
    if (auto it = j.find("curation"); it != j.end()) {
        read(*it, "clip_gate", c.clip_gate);
        read(*it, "per_class_cap", c.per_class_cap);
        read(*it, "target_objects", c.target_objects);
    }
    if (auto it = j.find("training"); it != j.end()) {
        read(*it, "steps", c.steps);
        read(*it, "batch_size", c.batch_size);
        read(*it, "objects_per_image", c.objects_per_image);
        read(*it, "lambda", c.lambda);
        read(*it, "bank_capacity", c.bank_capacity);
        read(*it, "feature_dim", c.feature_dim);
        read(*it, "projection_dim", c.projection_dim);
        read(*it, "learning_rate", c.learning_rate);
        read(*it, "domain_gap", c.domain_gap);
        read(*it, "surrogate_seg_loss", c.surrogate_seg_loss);
        read(*it, "real_images", c.real_images);
    }
    if (auto it = j.find("providers"); it != j.end()) {
        for (const auto& [name, ep] : it->items()) {
            const ProviderKind kind = parse_provider_kind(name);
            auto& target = c.providers[static_cast<std::size_t>(kind)];
            read(ep, "base_url", target.base_url);
            read(ep, "timeout_s", target.timeout_s);
            read(ep, "retries", target.retries);
        }
    }
}

void apply_env_overrides(PipelineConfig& config) {
    for (auto& ep : config.providers) {
        if (const char* v = std::getenv(env_name(ep.kind).c_str()); v != nullptr && *v != '\0') ep.base_url = v;
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    PipelineConfig c;
    try {
        from_json(Json::parse(in), c);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    apply_env_overrides(c);
    c.validate();
    return c;
}

}  // namespace dreamforge
