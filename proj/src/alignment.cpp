#include "dreamforge/alignment.hpp"

#include <cmath>
#include <limits>

#include "dreamforge/errors.hpp"
#include "dreamforge/kernels.hpp"

namespace dreamforge {

namespace {

struct CosineParts {
    double dot = 0.0;
    double norm_s = 0.0;
    double norm_p = 0.0;
};

CosineParts cosine_parts(std::span<const double> s, std::span<const double> p) {
    if (s.size() != p.size()) throw ContractViolation("sra: feature length mismatch");
    CosineParts out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.dot += s[i] * p[i];
        out.norm_s += s[i] * s[i];
        out.norm_p += p[i] * p[i];
    }
    out.norm_s = std::sqrt(out.norm_s);
    out.norm_p = std::sqrt(out.norm_p);
    if (out.norm_s == 0.0 || out.norm_p == 0.0) throw DegenerateData("sra: zero-norm feature");
    return out;
}

}  // namespace

MemoryBank::MemoryBank(CategoryId class_id, std::size_t capacity, std::size_t dimension)
    : class_id_(class_id), capacity_(capacity), dimension_(dimension) {
    if (capacity == 0) throw ContractViolation("memory bank capacity must be >= 1");
    if (dimension == 0) throw ContractViolation("memory bank dimension must be >= 1");
}

void MemoryBank::update(FeatureVec f) {
    if (f.source != Source::real) throw ContractViolation("memory bank accepts real features only");
    if (f.class_id != class_id_) throw ContractViolation("feature class does not match bank class");
    if (f.values.size() != dimension_) throw ContractViolation("feature length does not match bank dimension");
    for (double v : f.values) {
        if (!std::isfinite(v)) throw ContractViolation("feature has non-finite entries");
    }
    entries_.push_back(std::move(f));
    while (entries_.size() > capacity_) entries_.pop_front();
}

FeatureVec MemoryBank::prototype() const {
    if (entries_.empty()) {
        throw DegenerateData("no prototype: bank for class " + std::to_string(class_id_.value) + " is empty");
    }
    std::vector<std::span<const double>> rows;
    rows.reserve(entries_.size());
    for (const auto& e : entries_) rows.emplace_back(e.values);
    return FeatureVec{kernels::serial::column_mean(rows), class_id_, Source::real};
}

double sra_loss(std::span<const double> synthetic, std::span<const double> prototype) {
    const auto c = cosine_parts(synthetic, prototype);
    const double cos = std::clamp(c.dot / (c.norm_s * c.norm_p), -1.0, 1.0);
    return 1.0 - cos;
}

std::vector<double> sra_grad(std::span<const double> synthetic, std::span<const double> prototype) {
    const auto c = cosine_parts(synthetic, prototype);
    const double cos = c.dot / (c.norm_s * c.norm_p);
    const double a = 1.0 / (c.norm_s * c.norm_p);
    const double b = cos / (c.norm_s * c.norm_s);
    std::vector<double> g(synthetic.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -(a * prototype[i] - b * synthetic[i]);
    return g;
}

double total_loss(double l_seg, double l_sra, double lambda) {
    if (!(lambda >= 0.0)) throw ContractViolation("total_loss: lambda must be >= 0");
    return l_seg + lambda * l_sra;
}

void BankSet::update(FeatureVec f) {
    auto it = banks_.find(f.class_id);
    if (it == banks_.end()) it = banks_.emplace(f.class_id, MemoryBank(f.class_id, capacity_, dimension_)).first;
    it->second.update(std::move(f));
}

std::optional<FeatureVec> BankSet::prototype(CategoryId class_id) const {
    const MemoryBank* bank = find(class_id);
    if (bank == nullptr || bank->empty()) return std::nullopt;
    return bank->prototype();
}

const MemoryBank* BankSet::find(CategoryId class_id) const {
    auto it = banks_.find(class_id);
    return it == banks_.end() ? nullptr : &it->second;
}

Json bank_snapshot(const BankSet& banks) {
    Json list = Json::array();
    for (const auto& [cls, bank] : banks.banks()) {
        Json entries = Json::array();
        for (const auto& e : bank.entries()) entries.push_back(e.values);
        list.push_back(Json{{"class_id", cls}, {"entries", std::move(entries)}});
    }
    return Json{{"version", "banks/v1"},
                {"capacity", banks.capacity()},
                {"dimension", banks.dimension()},
                {"banks", std::move(list)}};
}

BankSet restore_banks(const Json& snapshot) {
    if (snapshot.value("version", std::string{}) != "banks/v1") throw ContractViolation("unknown bank snapshot version");
    BankSet banks(snapshot.at("capacity").get<std::size_t>(), snapshot.at("dimension").get<std::size_t>());
    for (const auto& b : snapshot.at("banks")) {
        const auto cls = b.at("class_id").get<CategoryId>();
        for (const auto& e : b.at("entries")) banks.update(FeatureVec{e.get<std::vector<double>>(), cls, Source::real});
    }
    return banks;
}

SraBatch sra_batch(const std::vector<FeatureVec>& synthetic, const BankSet& banks) {
    SraBatch out;
    out.losses.assign(synthetic.size(), std::numeric_limits<double>::quiet_NaN());
    out.grads.resize(synthetic.size());

    std::map<CategoryId, std::optional<FeatureVec>> protos;
    for (const auto& f : synthetic) {
        if (!protos.contains(f.class_id)) protos.emplace(f.class_id, banks.prototype(f.class_id));
    }
    std::vector<kernels::SraItem> items;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < synthetic.size(); ++i) {
        const auto& proto = protos.at(synthetic[i].class_id);
        if (!proto) {
            out.grads[i].assign(synthetic[i].values.size(), 0.0);
            ++out.skipped;
            continue;
        }
        items.push_back({synthetic[i].values, proto->values});
        index.push_back(i);
    }
    out.counted = items.size();
    if (items.empty()) return out;

    auto res = kernels::parallel::sra(items);
    const double scale = 1.0 / static_cast<double>(items.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < items.size(); ++k) {
        sum += res.losses[k];
        out.losses[index[k]] = res.losses[k];
        for (auto& g : res.grads[k]) g *= scale;
        out.grads[index[k]] = std::move(res.grads[k]);
    }
    out.mean_loss = sum * scale;
    return out;
}

}  // namespace dreamforge
