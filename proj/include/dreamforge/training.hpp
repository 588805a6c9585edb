#pragma once

// Desk-scale stand-in for the training loop. The feature extractor is a
// linear map over fixed per-object descriptors: a random projection of
// (class one-hot, normalized box center and size, mean mask confidence).
// Real objects go through a frozen map W_r; synthetic objects through a
// learnable W_s that starts displaced from W_r by `domain_gap`. Only the
// alignment term moves W_s, since the segmentation loss is a constant.

#include <filesystem>
#include <string>
#include <vector>

#include "dreamforge/alignment.hpp"
#include "dreamforge/coco.hpp"
#include "dreamforge/config.hpp"

namespace dreamforge {

/// Real images over the train categories, with per-object mask confidence in
/// place of an uncertainty. Deterministic in (vocab, config.seed).
std::vector<ImageRecord> make_stub_real_dataset(const Vocabulary& vocab, const PipelineConfig& config);

struct ObjectRef {
    std::size_t image = 0;
    std::size_t object = 0;

    bool operator==(const ObjectRef&) const = default;
};

struct BatchImage {
    Source source = Source::real;
    std::size_t image = 0;  ///< index into D_r or D_s, depending on source

    bool operator==(const BatchImage&) const = default;
};

struct Batch {
    std::vector<ObjectRef> synthetic;  ///< n x b objects from D_s
    std::vector<BatchImage> images;    ///< b images from D_r and D_s together
    bool clamped = false;              ///< fewer objects or images were available than requested
};

/// Uniform sampling without replacement within a step. Throws StageFailure
/// when D_s holds no objects.
Batch sample_batch(const std::vector<ImageRecord>& real, const std::vector<ImageRecord>& synthetic,
                   const PipelineConfig& config, std::uint64_t step_seed);

struct TrainStep {
    int step = 0;
    double sra_loss = 0.0;    ///< mean over synthetic objects with a prototype
    double total_loss = 0.0;  ///< surrogate segmentation loss + lambda * sra_loss
    std::size_t aligned = 0;  ///< synthetic objects that had a prototype
    std::size_t skipped = 0;
    double grad_norm = 0.0;
    /// Mean over bank classes of the mean cosine distance between every D_s
    /// object of that class and the class prototype, after the step.
    double cosine_distance = 0.0;
    std::size_t classes_measured = 0;

    bool operator==(const TrainStep&) const = default;
};

struct TrainingResult {
    std::vector<TrainStep> trace;
    bool diverged = false;
    std::string message;
    std::size_t warnings = 0;  ///< steps whose batch was clamped
};

TrainingResult simulate_training(const std::vector<ImageRecord>& real, const CocoDataset& synthetic,
                                 const PipelineConfig& config, int steps);

/// One row per step; the header names every TrainStep field.
std::string trace_csv(const std::vector<TrainStep>& trace);

Json training_summary(const TrainingResult& result, const PipelineConfig& config);

/// Loads the synthetic dataset from config.output_dir, runs the simulation and
/// writes training/trace.csv and training/summary.json. A missing or empty
/// dataset is a StageFailure that points at `dreamforge synth`.
TrainingResult run_training(const PipelineConfig& config, int steps);

}  // namespace dreamforge
