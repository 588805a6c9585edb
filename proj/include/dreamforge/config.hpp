#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dreamforge/json_io.hpp"
#include "dreamforge/providers.hpp"

namespace dreamforge {

/// Everything a run depends on. Full-scale values are noted beside the
/// desk-scale defaults.
struct PipelineConfig {
    std::uint64_t seed = 7;
    std::filesystem::path output_dir = "dreamforge_out";
    std::vector<std::string> train_categories{"dog",    "cat",   "sofa",  "person", "car",
                                              "bicycle", "bird", "cup",   "chair",  "boat"};

    // Category name association
    int k_runs = 5;
    int min_hits = 2;
    double tau_dedup = 0.90;

    // Scene synthesis
    int num_layouts = 100;
    int max_objects = 6;
    double overlap_max = 0.30;
    int min_box_px = 32;
    int canvas_width = 1024;
    int canvas_height = 1024;
    int layout_retries = 3;

    // Curation
    bool clip_gate = true;
    int per_class_cap = 0;         ///< 0 derives ceil(target_objects / #categories)
    int target_objects = 2000;     ///< n_s; 500k at full scale

    // Training simulation
    int steps = 200;
    int batch_size = 16;           ///< b
    int objects_per_image = 2;     ///< n, synthetic objects per batch image
    double lambda = 0.8;
    int bank_capacity = 64;        ///< beta
    int feature_dim = 256;         ///< L
    int projection_dim = 32;
    double learning_rate = 40.0;
    double domain_gap = 1.0;       ///< initial displacement of the synthetic map
    double surrogate_seg_loss = 1.0;
    int real_images = 200;

    int max_workers = 0;  ///< 0 lets OpenMP decide

    std::array<ProviderEndpoint, 5> providers{
        ProviderEndpoint{ProviderKind::llm},    ProviderEndpoint{ProviderKind::layout2image},
        ProviderEndpoint{ProviderKind::maskgen}, ProviderEndpoint{ProviderKind::scorer},
        ProviderEndpoint{ProviderKind::embed}};

    /// Throws ConfigError for out-of-range values.
    void validate() const;

    /// Per-class cap actually used by the uncertainty gate.
    int effective_per_class_cap(std::size_t num_categories) const;

    /// SHA-256 over the canonical JSON of every field except output_dir.
    std::string hash() const;
};

void to_json(Json& j, const PipelineConfig& c);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
void from_json(const Json& j, PipelineConfig& c);

/// Reads a config file. Base URLs can be overridden with DREAMFORGE_<KIND>_URL
/// (LLM, LAYOUT2IMAGE, MASKGEN, SCORE, EMBED).
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies DREAMFORGE_<KIND>_URL overrides from the environment.
void apply_env_overrides(PipelineConfig& config);

}  // namespace dreamforge
