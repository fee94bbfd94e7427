#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "refgrowth/citability.hpp"
#include "refgrowth/growth_curve.hpp"
#include "refgrowth/model.hpp"

// Synthetic corpora under the Bernoulli citation process.
//
// Time is cut into cohorts of width dt. The cohort at time t_i = t0 + i dt
// holds the articles published in [t_i, t_i + dt); its size is the rounded
// increment of P over that interval, with the rounding residue carried
// forward. An article of cohort i cites every article of every earlier
// cohort j independently with probability q(age), where the age
// (i - j - 1/2) dt is measured to the middle of the cited interval.
// Articles never cite their own cohort.
namespace refgrowth::montecarlo {

enum class SamplingMode {
    per_pair_bernoulli,   ///< one Bernoulli draw per (citing, cited) pair
    per_cohort_binomial,  ///< one Binomial(n_j, q) draw per (citing article, cited cohort)
};

std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view text);

struct SimulationConfig {
    GrowthCurve growth;
    CitabilityFunction kernel;
    double t0 = 0.0;
    double t_end = 0.0;
    double dt = 1.0;
    std::uint64_t seed = 0;
    SamplingMode sampling_mode = SamplingMode::per_cohort_binomial;
    int replications = 1;
    /// Upper bound on Bernoulli draws summed over replications (per-pair mode).
    std::uint64_t pair_budget = 2'000'000'000ULL;
    /// Worker threads for replications; 0 picks the hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

struct Cohort {
    double time = 0.0;
    std::int64_t article_count = 0;  ///< per replication
};

struct SimulatedArticle {
    int replication = 0;
    std::size_t cohort = 0;
    double publication_time = 0.0;
    std::vector<double> reference_ages;
};

/// Immutable once returned by simulate(). Articles are ordered by
/// replication, then cohort.
struct SimulatedCorpus {
    double t0 = 0.0;
    double dt = 1.0;
    int replications = 1;
    std::vector<Cohort> cohorts;
    std::vector<SimulatedArticle> articles;

    /// Number of articles published before cohort i in one replication.
    std::int64_t predecessors(std::size_t cohort) const;
    /// Index of the cohort at `time`; throws DomainError if there is none.
    std::size_t cohort_at(double time) const;
};

/// Cohort times and sizes for a configuration, without drawing citations.
std::vector<Cohort> build_cohorts(const GrowthCurve& growth, double t0, double t_end, double dt);

/// Per-replication engine. The 64-bit seed and replication index are mixed
/// through SplitMix64 into a seed sequence for a 64-bit Mersenne Twister, so
/// replications own independent, reproducible streams.
std::mt19937_64 replication_engine(std::uint64_t seed, int replication);

SimulatedCorpus simulate(const SimulationConfig& config);

struct CohortLengthStats {
    double time = 0.0;
    std::int64_t articles = 0;  ///< pooled over replications
    double mean = 0.0;
    double median = 0.0;
    double variance = 0.0;  ///< unbiased sample variance, 0 for a single article
    std::vector<std::int64_t> histogram;  ///< histogram[k] = articles with k references
};

/// Reference-list length statistics for every nonempty cohort.
std::vector<CohortLengthStats> empirical_length_stats(const SimulatedCorpus& corpus);

/// Pooled reference ages of all articles in the cohort at `at`. Survival at
/// each requested age a is the fraction of pooled references with age >= a.
model::AgeStatistics empirical_age_stats(const SimulatedCorpus& corpus, double at,
                                         std::span<const double> survival_ages = {});

/// One row per article: publication_year,n_references,reference_ages
/// (ages joined with ';').
std::string corpus_to_csv(const SimulatedCorpus& corpus);
SimulatedCorpus corpus_from_csv(const std::string& text, double t0, double dt);

}  // namespace refgrowth::montecarlo
