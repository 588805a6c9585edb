// dreamforge command line: synth, train-sim, report, validate.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dreamforge/coco.hpp"
#include "dreamforge/config.hpp"
#include "dreamforge/errors.hpp"
#include "dreamforge/pipeline.hpp"
#include "dreamforge/training.hpp"

namespace df = dreamforge;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, provider_failure = 3, degenerate = 4 };

int cmd_synth(const fs::path& config_path, bool resume, std::optional<std::uint64_t> seed,
              std::optional<std::string> halt_after) {
    auto config = df::load_config(config_path);
    if (seed) config.seed = *seed;
    df::RunOptions options;
    options.resume = resume;
    options.halt_after = std::move(halt_after);
    const auto result = df::run_synthesis(config, options);
    if (result.halted) {
        std::cout << "halted after " << *options.halt_after << "; manifest " << result.manifest_path.string() << "\n";
        return ok;
    }
    std::cout << "dataset " << result.dataset_path.string() << " (" << result.images << " images, " << result.objects
              << " objects)\n"
              << "sha256 " << result.dataset_sha256 << "\n"
              << "manifest " << result.manifest_path.string() << "\n";
    return ok;
}

int cmd_train(const fs::path& config_path, std::optional<int> steps, std::optional<double> lambda) {
    auto config = df::load_config(config_path);
    if (lambda) config.lambda = *lambda;
    const int t = steps.value_or(config.steps);
    const auto result = df::run_training(config, t);
    const auto summary = df::training_summary(result, config);
    std::cout << summary.dump(1) << "\n";
    if (result.diverged) {
        std::cerr << "training diverged: " << result.message << "\n";
        return degenerate;
    }
    return ok;
}

int cmd_report(const fs::path& manifest) {
    const auto report = df::emit_report(manifest);
    std::cout << report.markdown;
    return ok;
}

int cmd_validate(const fs::path& dataset) {
    const auto ds = df::read_coco_panoptic(dataset);
    std::size_t problems = 0;
    std::size_t objects = 0;
    for (const auto& rec : ds.records) {
        objects += rec.objects.size();
        for (const auto& p : df::validate_record(rec, ds.vocab)) {
            std::cerr << "image " << rec.image_id.value << ": " << p << "\n";
            ++problems;
        }
    }
    std::cout << ds.records.size() << " images, " << objects << " objects, " << ds.vocab.size() << " categories, "
              << problems << " problems\n";
    return problems == 0 ? ok : degenerate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dreamforge: synthetic dataset curation and alignment simulation"};
    app.require_subcommand(1);

    fs::path config_path;
    fs::path manifest_path;
    fs::path dataset_path;
    bool resume = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> halt_after;
    std::optional<int> steps;
    std::optional<double> lambda;

    auto* synth = app.add_subcommand("synth", "run the synthesis and filtering stages");
    synth->add_option("--config", config_path, "config JSON")->required();
    synth->add_flag("--resume", resume, "reuse completed stages from the existing manifest");
    synth->add_option("--seed", seed, "override the config seed");
    synth->add_option("--halt-after", halt_after, "stop after the named stage");

    auto* train = app.add_subcommand("train-sim", "run the alignment training simulation on the synthesized dataset");
    train->add_option("--config", config_path, "config JSON")->required();
    train->add_option("--steps", steps, "number of steps T")->check(CLI::PositiveNumber);
    train->add_option("--lambda", lambda, "override the alignment weight")->check(CLI::NonNegativeNumber);

    auto* report = app.add_subcommand("report", "write report.md and report.json for a run");
    report->add_option("--manifest", manifest_path, "manifest.json of the run")->required()->check(CLI::ExistingFile);

    auto* validate = app.add_subcommand("validate", "check a COCO panoptic export");
    validate->add_option("--dataset", dataset_path, "coco_panoptic.json")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*synth) return cmd_synth(config_path, resume, seed, halt_after);
        if (*train) return cmd_train(config_path, steps, lambda);
        if (*report) return cmd_report(manifest_path);
        if (*validate) return cmd_validate(dataset_path);
    } catch (const df::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const df::StageFailure& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return provider_failure;
    } catch (const df::ProviderError& e) {
        std::cerr << "provider failure: " << e.what() << "\n";
        return provider_failure;
    } catch (const df::DegenerateData& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return degenerate;
    } catch (const df::ExportError& e) {
        std::cerr << "invalid dataset: " << e.what() << "\n";
        return degenerate;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return failure;
}
