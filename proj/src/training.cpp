#include "dreamforge/training.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"
#include "dreamforge/manifest.hpp"
#include "dreamforge/rle.hpp"
#include "dreamforge/stub_providers.hpp"

namespace dreamforge {

namespace fs = std::filesystem;

namespace {

constexpr double kGeometryScale = 0.5;

// Row-major rows x cols.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < cols; ++c) s += v[r * cols + c] * x[c];
            y[r] = s;
        }
        return y;
    }
};

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
    Matrix m(rows, cols);
    HashRng rng(seed);
    for (auto& x : m.v) x = scale * rng.gaussian();
    return m;
}

class Descriptors {
public:
    Descriptors(const Vocabulary& vocab, const PipelineConfig& config)
        : projection_(gaussian_matrix(static_cast<std::size_t>(config.projection_dim), vocab.size() + 5,
                                      hash_combine(config.seed, fnv1a("projection")),
                                      1.0 / std::sqrt(static_cast<double>(vocab.size() + 5)))) {
        for (std::size_t i = 0; i < vocab.size(); ++i) index_[vocab.categories()[i].id] = i;
    }

    std::vector<double> of(const ImageRecord& image, const ObjectInstance& obj) const {
        const auto it = index_.find(obj.category_id);
        if (it == index_.end()) throw ContractViolation("descriptor: category outside the vocabulary");
        std::vector<double> raw(index_.size() + 5, 0.0);
        raw[it->second] = 1.0;
        const double w = image.width;
        const double h = image.height;
        const std::size_t g = index_.size();
        raw[g + 0] = kGeometryScale * (obj.bbox.x + 0.5 * obj.bbox.w) / w;
        raw[g + 1] = kGeometryScale * (obj.bbox.y + 0.5 * obj.bbox.h) / h;
        raw[g + 2] = kGeometryScale * obj.bbox.w / w;
        raw[g + 3] = kGeometryScale * obj.bbox.h / h;
        raw[g + 4] = kGeometryScale * (1.0 - obj.uncertainty.value_or(0.0));
        return projection_.apply(raw);
    }

private:
    Matrix projection_;
    std::map<CategoryId, std::size_t> index_;
};

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<ImageRecord> make_stub_real_dataset(const Vocabulary& vocab, const PipelineConfig& config) {
    const auto train = vocab.with_origin(Origin::train);
    if (train.empty()) throw DegenerateData("real dataset needs at least one train category");
    HashRng rng(hash_combine(config.seed, fnv1a("real-dataset")));
    const int w = config.canvas_width;
    const int h = config.canvas_height;
    const int min_side = std::min({config.min_box_px, w, h});
    std::vector<ImageRecord> out;
    for (int i = 0; i < config.real_images; ++i) {
        ImageRecord rec;
        rec.image_id = ImageId{i + 1};
        rec.width = w;
        rec.height = h;
        rec.source = Source::real;
        rec.image_uri = "stub://real/" + std::to_string(i + 1);
        const int count = 1 + static_cast<int>(rng.below(3));
        for (int j = 0; j < count; ++j) {
            const auto& cat = train[rng.below(train.size())];
            const int bw = min_side + static_cast<int>(rng.below(static_cast<std::size_t>(std::max(1, w / 2 - min_side + 1))));
            const int bh = min_side + static_cast<int>(rng.below(static_cast<std::size_t>(std::max(1, h / 2 - min_side + 1))));
            const BBox box{static_cast<int>(rng.below(static_cast<std::size_t>(w - bw + 1))),
                           static_cast<int>(rng.below(static_cast<std::size_t>(h - bh + 1))), bw, bh};
            BitGrid local(box.w, box.h);
            for (int y = 0; y < box.h; ++y) {
                for (int x = 0; x < box.w; ++x) local.set(x, y);
            }
            ObjectInstance obj;
            obj.object_id = ObjectId{rec.image_id.value * 100 + j};
            obj.category_id = cat.id;
            obj.bbox = box;
            obj.mask = rle_encode_in_box(w, h, box, local);
            obj.uncertainty = 0.02 + 0.13 * rng.uniform();
            rec.objects.push_back(std::move(obj));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

Batch sample_batch(const std::vector<ImageRecord>& real, const std::vector<ImageRecord>& synthetic,
                   const PipelineConfig& config, std::uint64_t step_seed) {
    std::vector<ObjectRef> pool;
    for (std::size_t i = 0; i < synthetic.size(); ++i) {
        for (std::size_t j = 0; j < synthetic[i].objects.size(); ++j) pool.push_back({i, j});
    }
    if (pool.empty()) {
        throw StageFailure("train-sim", "the synthetic dataset has no objects; run `dreamforge synth` first");
    }
    if (config.batch_size < 1) throw ContractViolation("sample_batch: batch size must be >= 1");

    HashRng rng(step_seed);
    auto draw = [&rng]<class T>(std::vector<T>& items, std::size_t want) {
        want = std::min(want, items.size());
        for (std::size_t i = 0; i < want; ++i) std::swap(items[i], items[i + rng.below(items.size() - i)]);
        items.resize(want);
    };

    Batch batch;
    const auto b = static_cast<std::size_t>(config.batch_size);
    const std::size_t want_objects = b * static_cast<std::size_t>(config.objects_per_image);
    batch.clamped = pool.size() < want_objects;
    draw(pool, want_objects);
    batch.synthetic = std::move(pool);

    std::vector<BatchImage> images;
    for (std::size_t i = 0; i < real.size(); ++i) images.push_back({Source::real, i});
    for (std::size_t i = 0; i < synthetic.size(); ++i) images.push_back({Source::synthetic, i});
    batch.clamped = batch.clamped || images.size() < b;
    draw(images, b);
    batch.images = std::move(images);
    return batch;
}

TrainingResult simulate_training(const std::vector<ImageRecord>& real, const CocoDataset& synthetic,
                                 const PipelineConfig& config, int steps) {
    config.validate();
    if (steps < 1) throw ConfigError("steps must be >= 1");
    const auto L = static_cast<std::size_t>(config.feature_dim);
    const auto D = static_cast<std::size_t>(config.projection_dim);
    const Descriptors descriptors(synthetic.vocab, config);

    const Matrix w_real = gaussian_matrix(L, D, hash_combine(config.seed, fnv1a("w-real")), 1.0 / std::sqrt(double(D)));
    Matrix w_syn = w_real;
    {
        const Matrix gap = gaussian_matrix(L, D, hash_combine(config.seed, fnv1a("w-gap")),
                                           config.domain_gap / std::sqrt(double(D)));
        for (std::size_t i = 0; i < w_syn.v.size(); ++i) w_syn.v[i] += gap.v[i];
    }

    // Descriptors are fixed, so compute them once.
    auto describe_all = [&](const std::vector<ImageRecord>& records) {
        std::vector<std::vector<std::vector<double>>> out(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            for (const auto& o : records[i].objects) out[i].push_back(descriptors.of(records[i], o));
        }
        return out;
    };
    const auto real_x = describe_all(real);
    const auto syn_x = describe_all(synthetic.records);
    std::vector<std::pair<CategoryId, const std::vector<double>*>> syn_flat;
    for (std::size_t i = 0; i < synthetic.records.size(); ++i) {
        for (std::size_t j = 0; j < syn_x[i].size(); ++j) {
            syn_flat.emplace_back(synthetic.records[i].objects[j].category_id, &syn_x[i][j]);
        }
    }

    BankSet banks(static_cast<std::size_t>(config.bank_capacity), L);
    TrainingResult result;
    for (int t = 1; t <= steps; ++t) {
        const Batch batch = sample_batch(real, synthetic.records, config, hash_combine(config.seed, std::uint64_t(t)));
        result.warnings += batch.clamped ? 1 : 0;

        std::vector<FeatureVec> feats;
        std::vector<const std::vector<double>*> xs;
        for (const auto& ref : batch.synthetic) {
            const auto& x = syn_x[ref.image][ref.object];
            xs.push_back(&x);
            feats.push_back({w_syn.apply(x), synthetic.records[ref.image].objects[ref.object].category_id,
                             Source::synthetic});
        }
        const SraBatch sra = sra_batch(feats, banks);

        TrainStep rec;
        rec.step = t;
        rec.sra_loss = sra.mean_loss;
        rec.total_loss = total_loss(config.surrogate_seg_loss, sra.mean_loss, config.lambda);
        rec.aligned = sra.counted;
        rec.skipped = sra.skipped;

        // dL/dW_s = lambda * sum_i g_i x_i^T; the segmentation surrogate is constant.
        Matrix grad(L, D);
        for (std::size_t i = 0; i < feats.size(); ++i) {
            const auto& g = sra.grads[i];
            const auto& x = *xs[i];
            for (std::size_t r = 0; r < L; ++r) {
                if (g[r] == 0.0) continue;
                for (std::size_t c = 0; c < D; ++c) grad.at(r, c) += config.lambda * g[r] * x[c];
            }
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < grad.v.size(); ++i) {
            norm += grad.v[i] * grad.v[i];
            w_syn.v[i] -= config.learning_rate * grad.v[i];
        }
        rec.grad_norm = std::sqrt(norm);

        for (const auto& img : batch.images) {
            if (img.source != Source::real) continue;
            for (std::size_t j = 0; j < real[img.image].objects.size(); ++j) {
                banks.update({w_real.apply(real_x[img.image][j]), real[img.image].objects[j].category_id, Source::real});
            }
        }

        std::map<CategoryId, std::vector<double>> protos;
        for (const auto& [cls, bank] : banks.banks()) {
            if (!bank.empty()) protos.emplace(cls, bank.prototype().values);
        }
        std::vector<double> dist(syn_flat.size(), std::nan(""));
#pragma omp parallel for schedule(static)
        for (long k = 0; k < static_cast<long>(syn_flat.size()); ++k) {
            const auto it = protos.find(syn_flat[k].first);
            if (it != protos.end()) dist[k] = cosine_distance(w_syn.apply(*syn_flat[k].second), it->second);
        }
        std::map<CategoryId, std::pair<double, std::size_t>> per_class;
        for (std::size_t k = 0; k < syn_flat.size(); ++k) {
            if (std::isnan(dist[k])) continue;
            auto& acc = per_class[syn_flat[k].first];
            acc.first += dist[k];
            ++acc.second;
        }
        double sum = 0.0;
        for (const auto& [cls, acc] : per_class) sum += acc.first / static_cast<double>(acc.second);
        rec.classes_measured = per_class.size();
        rec.cosine_distance = per_class.empty() ? 0.0 : sum / static_cast<double>(per_class.size());

        result.trace.push_back(rec);
        if (!std::isfinite(rec.total_loss) || !std::isfinite(rec.grad_norm) || !std::isfinite(rec.cosine_distance)) {
            result.diverged = true;
            result.message = "non-finite loss at step " + std::to_string(t);
            break;
        }
    }
    return result;
}

std::string trace_csv(const std::vector<TrainStep>& trace) {
    std::ostringstream out;
    out << "step,sra_loss,total_loss,aligned,skipped,grad_norm,cosine_distance,classes_measured\n";
    for (const auto& s : trace) {
        out << s.step << ',' << num(s.sra_loss) << ',' << num(s.total_loss) << ',' << s.aligned << ',' << s.skipped
            << ',' << num(s.grad_norm) << ',' << num(s.cosine_distance) << ',' << s.classes_measured << '\n';
    }
    return out.str();
}

Json training_summary(const TrainingResult& result, const PipelineConfig& config) {
    Json j{{"steps", result.trace.size()},
           {"lambda", config.lambda},
           {"diverged", result.diverged},
           {"clamped_batches", result.warnings}};
    if (!result.trace.empty()) {
        const double first = result.trace.front().cosine_distance;
        const double last = result.trace.back().cosine_distance;
        j["initial_cosine_distance"] = first;
        j["final_cosine_distance"] = last;
        j["relative_drop"] = first > 0.0 ? (first - last) / first : 0.0;
        j["final_sra_loss"] = result.trace.back().sra_loss;
    }
    if (!result.message.empty()) j["message"] = result.message;
    return j;
}

TrainingResult run_training(const PipelineConfig& config, int steps) {
    const fs::path dataset = config.output_dir / "dataset" / "coco_panoptic.json";
    if (!fs::exists(dataset)) {
        throw StageFailure("train-sim", "no synthetic dataset at " + dataset.string() +
                                            "; run `dreamforge synth --config <cfg>` first");
    }
    const CocoDataset ds = read_coco_panoptic(dataset);
    const auto real = make_stub_real_dataset(ds.vocab, config);
    TrainingResult result = simulate_training(real, ds, config, steps);
    const fs::path dir = config.output_dir / "training";
    write_text_file(dir / "trace.csv", trace_csv(result.trace));
    write_text_file(dir / "summary.json", training_summary(result, config).dump(1) + "\n");
    return result;
}

}  // namespace dreamforge
