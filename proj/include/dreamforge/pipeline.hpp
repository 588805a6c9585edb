#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dreamforge/coco.hpp"
#include "dreamforge/config.hpp"
#include "dreamforge/curation.hpp"
#include "dreamforge/manifest.hpp"
#include "dreamforge/providers.hpp"

namespace dreamforge {

/// Synthesis stages in execution order. The last one writes the dataset and reports.
const std::vector<std::string>& synthesis_stages();

struct RunOptions {
    bool resume = false;
    /// Stop right after this stage completes, as if the process had been killed.
    std::optional<std::string> halt_after;
};

struct SynthesisResult {
    Manifest manifest;
    bool halted = false;
    std::filesystem::path manifest_path;
    std::filesystem::path dataset_path;  ///< empty until the export stage has run
    std::string dataset_sha256;
    std::size_t images = 0;
    std::size_t objects = 0;
};

/// Layout of a run directory.
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path manifest() const { return root / "manifest.json"; }
    std::filesystem::path stage_file(std::size_t index, const std::string& name) const;
    std::filesystem::path dataset() const { return root / "dataset" / "coco_panoptic.json"; }
    std::filesystem::path vocabulary() const { return root / "vocabulary.json"; }
    std::filesystem::path reports() const { return root / "reports"; }
};

/// Runs category name association, layout planning, image generation, the
/// CLIP gate, mask annotation and the uncertainty gate, then exports the
/// dataset. Every stage output is persisted under config.output_dir/stages and
/// checksummed in the manifest. With resume, completed stages whose checksums
/// still match are reused; a config hash mismatch is a ConfigError.
/// A failing stage is marked failed in the saved manifest and rethrown as StageFailure.
SynthesisResult run_synthesis(const PipelineConfig& config, const ProviderSet& providers, const RunOptions& options = {});

/// Uses make_providers(config.providers, config.seed).
SynthesisResult run_synthesis(const PipelineConfig& config, const RunOptions& options = {});

/// Plain summary tables built from a manifest and the gate reports.
struct RunReport {
    Json summary;
    std::string markdown;
};

/// Vocabulary growth, per-stage keep rates, per-class object counts and, when
/// a training trace is available, its final metrics. Missing stages give zeros.
RunReport build_report(const Manifest& manifest, const std::vector<SelectionReport>& reports,
                       const Json& training_summary = Json());

/// Builds the report for the run directory holding `manifest_path` and writes
/// report.md and report.json next to it.
RunReport emit_report(const std::filesystem::path& manifest_path);

}  // namespace dreamforge
