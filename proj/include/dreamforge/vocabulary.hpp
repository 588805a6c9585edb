#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dreamforge/dataset.hpp"
#include "dreamforge/json_io.hpp"
#include "dreamforge/providers.hpp"

namespace dreamforge {

/// A name proposed by the LLM before it becomes a novel category.
struct CandidateName {
    std::string name;  ///< canonical form
    CategoryId source_class;
    std::set<int> run_hits;  ///< 1-based run indices that produced the name
    std::optional<std::vector<double>> embedding;

    bool operator==(const CandidateName&) const = default;
};

struct RunOutcome {
    int run = 0;
    bool ok = true;
    std::string error;
};

struct ExpansionResult {
    std::vector<CandidateName> candidates;  ///< sorted by name
    std::vector<RunOutcome> runs;
    std::vector<CallRecord> calls;
};

/// Seed handed to the LLM for run `run` (1-based).
std::uint64_t cna_run_seed(std::uint64_t seed, int run);

/// Splits an association reply into canonical names: commas or newlines
/// separate items; bullets, numbering, quotes and trailing periods are stripped.
std::vector<std::string> parse_name_list(std::string_view reply);

/// Queries the LLM once per (run, train class) for `k_runs` runs and attributes
/// every returned name to the runs that produced it. A name proposed for several
/// classes keeps the first class in vocabulary order as its source. Runs with a
/// failed call are excluded; fewer than min(2, k_runs) good runs is a StageFailure.
ExpansionResult expand_vocabulary(const Vocabulary& vocab, int k_runs, std::uint64_t seed, const ProviderSet& providers);

/// Keeps exactly the candidates with |run_hits| >= min_hits, order preserved.
std::vector<CandidateName> consensus_filter(std::vector<CandidateName> candidates, int min_hits);

/// Local part-of-speech fallback: false for common verbs, adjectives and
/// malformed names (digits, punctuation other than spaces and hyphens).
bool passes_noun_filter(std::string_view canonical);

struct NameDecision {
    std::string name;
    CategoryId source_class;
    std::set<int> run_hits;
    bool accepted = false;
    std::string reason;  ///< empty when accepted
    double max_cosine = 0.0;
    std::string nearest_train;
};

struct DedupResult {
    Vocabulary vocab;  ///< input vocabulary with accepted names appended as novel categories
    std::vector<NameDecision> decisions;
    std::vector<CallRecord> calls;
};

/// Drops candidates that equal a train name, fail the noun filter, fail to
/// embed, or reach cosine >= tau_dedup with any train category; the rest are
/// appended as novel categories with fresh ids.
DedupResult semantic_dedup(const std::vector<CandidateName>& candidates, const Vocabulary& vocab, double tau_dedup,
                           const ProviderSet& providers);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Vocabulary file with per-name provenance and drop reasons.
Json vocabulary_document(const DedupResult& result, const ExpansionResult& expansion, int min_hits);

}  // namespace dreamforge
