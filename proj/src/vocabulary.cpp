#include "dreamforge/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_set>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"
#include "dreamforge/prompts.hpp"

namespace dreamforge {

std::uint64_t cna_run_seed(std::uint64_t seed, int run) {
    return hash_combine(mix64(seed ^ 0xC4A0000000000000ULL), static_cast<std::uint64_t>(run));
}

std::vector<std::string> parse_name_list(std::string_view reply) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    std::size_t pos = 0;
    while (pos <= reply.size()) {
        const auto end = reply.find_first_of(",\n;", pos);
        std::string_view item = reply.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        auto strip = [&] {
            while (!item.empty() && (std::isspace(static_cast<unsigned char>(item.front())) || item.front() == '-' ||
                                     item.front() == '*' || item.front() == '"' || item.front() == '\'')) {
                item.remove_prefix(1);
            }
            while (!item.empty() && (std::isspace(static_cast<unsigned char>(item.back())) || item.back() == '.' ||
                                     item.back() == '"' || item.back() == '\'')) {
                item.remove_suffix(1);
            }
        };
        strip();
        // "1." / "2)" numbering
        std::size_t digits = 0;
        while (digits < item.size() && std::isdigit(static_cast<unsigned char>(item[digits]))) ++digits;
        if (digits > 0 && digits < item.size() && (item[digits] == '.' || item[digits] == ')')) {
            item.remove_prefix(digits + 1);
            strip();
        }
        std::string name = canonical_name(item);
        if (!name.empty() && seen.insert(name).second) out.push_back(std::move(name));
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return out;
}

ExpansionResult expand_vocabulary(const Vocabulary& vocab, int k_runs, std::uint64_t seed, const ProviderSet& providers) {
    const auto train = vocab.with_origin(Origin::train);
    if (train.empty()) throw ContractViolation("expand_vocabulary: vocabulary has no train categories");
    if (k_runs < 1) throw ContractViolation("expand_vocabulary: k_runs must be >= 1");

    struct Task {
        std::vector<std::string> names;
        std::vector<CallRecord> calls;
        bool ok = true;
        std::string error;
    };
    const auto n_classes = static_cast<std::ptrdiff_t>(train.size());
    const std::ptrdiff_t n_tasks = n_classes * k_runs;
    std::vector<Task> tasks(static_cast<std::size_t>(n_tasks));

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n_tasks; ++t) {
        const int run = static_cast<int>(t / n_classes) + 1;
        const auto& cls = train[static_cast<std::size_t>(t % n_classes)];
        auto& task = tasks[static_cast<std::size_t>(t)];
        ProviderSession session(providers);
        try {
            task.names = parse_name_list(session.llm_complete(prompts::associate(cls.name), cna_run_seed(seed, run)));
        } catch (const ProviderError& e) {
            task.ok = false;
            task.error = e.what();
        }
        task.calls = session.take_log();
    }

    ExpansionResult result;
    std::map<std::string, CandidateName> by_name;
    int good_runs = 0;
    for (int run = 1; run <= k_runs; ++run) {
        RunOutcome outcome{run, true, {}};
        for (std::ptrdiff_t c = 0; c < n_classes; ++c) {
            const auto& task = tasks[static_cast<std::size_t>((run - 1) * n_classes + c)];
            result.calls.insert(result.calls.end(), task.calls.begin(), task.calls.end());
            if (!task.ok && outcome.ok) {
                outcome.ok = false;
                outcome.error = task.error;
            }
        }
        result.runs.push_back(outcome);
        if (!outcome.ok) continue;
        ++good_runs;
        for (std::ptrdiff_t c = 0; c < n_classes; ++c) {
            const auto& task = tasks[static_cast<std::size_t>((run - 1) * n_classes + c)];
            for (const auto& name : task.names) {
                auto [it, inserted] = by_name.try_emplace(name);
                if (inserted) {
                    it->second.name = name;
                    it->second.source_class = train[static_cast<std::size_t>(c)].id;
                }
                it->second.run_hits.insert(run);
            }
        }
    }
    if (good_runs < std::min(2, k_runs)) {
        throw StageFailure("cna", "only " + std::to_string(good_runs) + " of " + std::to_string(k_runs) +
                                      " association runs succeeded");
    }
    for (auto& [name, cand] : by_name) result.candidates.push_back(std::move(cand));
    return result;
}

std::vector<CandidateName> consensus_filter(std::vector<CandidateName> candidates, int min_hits) {
    if (min_hits < 2) throw ContractViolation("consensus_filter: min_hits must be >= 2");
    std::erase_if(candidates,
                  [min_hits](const CandidateName& c) { return static_cast<int>(c.run_hits.size()) < min_hits; });
    return candidates;
}

bool passes_noun_filter(std::string_view canonical) {
    static const std::unordered_set<std::string_view> stop{
        // verbs and gerunds
        "running", "walking", "sitting", "standing", "sleeping", "eating", "playing", "jumping", "flying",
        "swimming", "driving", "riding", "reading", "cooking", "holding", "looking", "run", "walk", "sit", "eat",
        "play", "jump", "fly", "swim", "drive", "ride", "sleep", "bark", "barking", "chase", "chasing",
        // adjectives
        "big", "small", "large", "tiny", "red", "blue", "green", "yellow", "black", "white", "bright", "dark",
        "fluffy", "furry", "wooden", "metal", "plastic", "old", "new", "happy", "sad", "cute", "soft", "hard",
        "hot", "cold", "wet", "dry", "fast", "slow", "tall", "short", "beautiful", "shiny", "loud", "quiet",
        // function words
        "the", "a", "an", "and", "or", "with", "of", "in", "on", "none", "other", "etc", "various", "some"};
    if (canonical.empty() || stop.contains(canonical)) return false;
    for (char ch : canonical) {
        const auto c = static_cast<unsigned char>(ch);
        if (!(std::isalpha(c) || c == ' ' || c == '-')) return false;
    }
    return true;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ContractViolation("cosine: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DegenerateData("cosine: zero-norm vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

DedupResult semantic_dedup(const std::vector<CandidateName>& candidates, const Vocabulary& vocab, double tau_dedup,
                           const ProviderSet& providers) {
    if (!(tau_dedup > 0.0 && tau_dedup < 1.0)) throw ContractViolation("semantic_dedup: tau_dedup must be in (0,1)");
    DedupResult result;
    result.vocab = vocab;
    ProviderSession session(providers);

    const auto train = vocab.with_origin(Origin::train);
    std::vector<std::vector<double>> train_vecs;
    train_vecs.reserve(train.size());
    for (const auto& c : train) {
        try {
            train_vecs.push_back(session.embed_text(canonical_name(c.name)));
        } catch (const ProviderError& e) {
            result.calls = session.take_log();
            throw StageFailure("cna", std::string("cannot embed train category '") + c.name + "': " + e.what());
        }
    }

    for (const auto& cand : candidates) {
        NameDecision d{cand.name, cand.source_class, cand.run_hits, false, {}, 0.0, {}};
        if (const Category* existing = vocab.find_name(cand.name)) {
            d.reason = existing->origin == Origin::train ? "exact-train-match" : "already-in-vocabulary";
            d.max_cosine = 1.0;
            d.nearest_train = existing->name;
        } else if (!passes_noun_filter(cand.name)) {
            d.reason = "non-noun";
        } else {
            std::optional<std::vector<double>> vec = cand.embedding;
            if (!vec) {
                try {
                    vec = session.embed_text(cand.name);
                } catch (const ProviderError& e) {
                    d.reason = std::string("embedding-failed: ") + e.what();
                }
            }
            if (vec) {
                d.max_cosine = -1.0;
                for (std::size_t i = 0; i < train.size(); ++i) {
                    const double c = cosine(*vec, train_vecs[i]);
                    if (c > d.max_cosine) {
                        d.max_cosine = c;
                        d.nearest_train = train[i].name;
                    }
                }
                if (d.max_cosine >= tau_dedup) {
                    d.reason = "semantic-duplicate";
                } else {
                    d.accepted = true;
                    result.vocab.add(cand.name, Origin::novel);
                }
            }
        }
        result.decisions.push_back(std::move(d));
    }
    result.calls = session.take_log();
    return result;
}

Json vocabulary_document(const DedupResult& result, const ExpansionResult& expansion, int min_hits) {
    Json provenance = Json::array();
    std::map<std::string, const NameDecision*> decided;
    for (const auto& d : result.decisions) decided[d.name] = &d;
    for (const auto& c : expansion.candidates) {
        Json p{{"name", c.name}, {"source_class", c.source_class}, {"run_hits", c.run_hits}};
        if (auto it = decided.find(c.name); it != decided.end()) {
            const NameDecision& d = *it->second;
            p["status"] = d.accepted ? "accepted" : "dropped";
            if (!d.accepted) p["reason"] = d.reason;
            p["max_cosine"] = d.max_cosine;
            if (!d.nearest_train.empty()) p["nearest_train"] = d.nearest_train;
        } else {
            p["status"] = "dropped";
            p["reason"] = "below-consensus";
        }
        provenance.push_back(std::move(p));
    }
    Json runs = Json::array();
    for (const auto& r : expansion.runs) {
        Json jr{{"run", r.run}, {"ok", r.ok}};
        if (!r.ok) jr["error"] = r.error;
        runs.push_back(std::move(jr));
    }
    return Json{{"version", "vocabulary/v1"},
                {"prompt_template", std::string(prompts::kAssociateVersion)},
                {"min_hits", min_hits},
                {"categories", result.vocab},
                {"runs", runs},
                {"provenance", provenance}};
}

}  // namespace dreamforge
