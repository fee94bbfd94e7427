#include "refgrowth/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include <fmt/format.h>

#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"
#include "refgrowth/stats.hpp"

namespace refgrowth::montecarlo {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<SimulatedArticle> run_replication(const SimulationConfig& config, const std::vector<Cohort>& cohorts,
                                              int replication) {
    auto engine = replication_engine(config.seed, replication);
    std::vector<SimulatedArticle> articles;

    for (std::size_t i = 0; i < cohorts.size(); ++i) {
        // Citation probability into each earlier cohort, youngest first.
        struct Target {
            std::int64_t size;
            double age;
            double p;
        };
        std::vector<Target> targets;
        for (std::size_t j = i; j-- > 0;) {
            if (cohorts[j].article_count == 0) continue;
            const double age = (static_cast<double>(i - j) - 0.5) * config.dt;
            const double p = config.kernel(age);
            if (p > 0.0) targets.push_back({cohorts[j].article_count, age, p});
        }
        std::vector<std::binomial_distribution<std::int64_t>> binomials;
        std::vector<std::bernoulli_distribution> bernoullis;
        for (const auto& target : targets) {
            binomials.emplace_back(target.size, std::min(target.p, 1.0));
            bernoullis.emplace_back(std::min(target.p, 1.0));
        }

        for (std::int64_t k = 0; k < cohorts[i].article_count; ++k) {
            SimulatedArticle article;
            article.replication = replication;
            article.cohort = i;
            article.publication_time = cohorts[i].time;
            for (std::size_t m = 0; m < targets.size(); ++m) {
                std::int64_t cited = 0;
                if (targets[m].p >= 1.0) {
                    cited = targets[m].size;
                } else if (config.sampling_mode == SamplingMode::per_cohort_binomial) {
                    cited = binomials[m](engine);
                } else {
                    for (std::int64_t y = 0; y < targets[m].size; ++y) cited += bernoullis[m](engine) ? 1 : 0;
                }
                article.reference_ages.insert(article.reference_ages.end(), static_cast<std::size_t>(cited),
                                              targets[m].age);
            }
            articles.push_back(std::move(article));
        }
    }
    return articles;
}

}  // namespace

std::string_view to_string(SamplingMode mode) {
    return mode == SamplingMode::per_pair_bernoulli ? "per_pair_bernoulli" : "per_cohort_binomial";
}

SamplingMode parse_sampling_mode(std::string_view text) {
    if (text == "per_pair_bernoulli") return SamplingMode::per_pair_bernoulli;
    if (text == "per_cohort_binomial") return SamplingMode::per_cohort_binomial;
    throw ConfigError(fmt::format("simulation.sampling_mode: unknown mode '{}' "
                                  "(expected per_pair_bernoulli or per_cohort_binomial)",
                                  text));
}

void SimulationConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("simulation.dt: must be finite and > 0");
    if (!std::isfinite(t0)) throw ConfigError("simulation.t0: must be finite");
    if (!std::isfinite(t_end) || !(t_end > t0)) throw ConfigError("simulation.t_end: must be finite and > t0");
    if (t_end - t0 < dt * (1.0 - 1e-9)) throw ConfigError("simulation.dt: window shorter than one cohort step");
    if (replications < 1) throw ConfigError("simulation.replications: must be >= 1");
    if (t0 < growth.domain_begin()) {
        throw ConfigError(fmt::format("simulation.t0: {} precedes the growth curve's domain", t0));
    }
}

std::vector<Cohort> build_cohorts(const GrowthCurve& growth, double t0, double t_end, double dt) {
    const auto steps = static_cast<std::size_t>(std::floor((t_end - t0) / dt + 1e-9));
    if (t0 + (static_cast<double>(steps) + 1.0) * dt > growth.domain_end() + 1e-9 * dt) {
        throw DomainError(fmt::format("growth curve must extend to t_end + dt = {} (ends at {})",
                                      t0 + (static_cast<double>(steps) + 1.0) * dt, growth.domain_end()));
    }
    std::vector<Cohort> cohorts;
    cohorts.reserve(steps + 1);
    const double base = growth.value(t0);
    std::int64_t emitted = 0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double time = t0 + static_cast<double>(i) * dt;
        const double upper = std::min(time + dt, growth.domain_end());
        const auto target = static_cast<std::int64_t>(std::llround(growth.value(upper) - base));
        const std::int64_t size = std::max<std::int64_t>(0, target - emitted);
        emitted += size;
        cohorts.push_back({time, size});
    }
    return cohorts;
}

std::mt19937_64 replication_engine(std::uint64_t seed, int replication) {
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(replication) + 1));
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); i += 2) {
        const std::uint64_t v = splitmix64(state);
        words[i] = static_cast<std::uint32_t>(v);
        words[i + 1] = static_cast<std::uint32_t>(v >> 32);
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

std::int64_t SimulatedCorpus::predecessors(std::size_t cohort) const {
    std::int64_t total = 0;
    for (std::size_t j = 0; j < cohort && j < cohorts.size(); ++j) total += cohorts[j].article_count;
    return total;
}

std::size_t SimulatedCorpus::cohort_at(double time) const {
    const double tol = 1e-9 * std::max(1.0, dt);
    for (std::size_t i = 0; i < cohorts.size(); ++i) {
        if (std::abs(cohorts[i].time - time) <= tol) return i;
    }
    throw DomainError(fmt::format("no cohort at time {}", time));
}

SimulatedCorpus simulate(const SimulationConfig& config) {
    config.validate();
    SimulatedCorpus corpus;
    corpus.t0 = config.t0;
    corpus.dt = config.dt;
    corpus.replications = config.replications;
    corpus.cohorts = build_cohorts(config.growth, config.t0, config.t_end, config.dt);

    if (config.sampling_mode == SamplingMode::per_pair_bernoulli) {
        // Pair count per replication, bounded before any drawing starts.
        long double pairs = 0.0L;
        std::int64_t before = 0;
        for (const auto& c : corpus.cohorts) {
            pairs += static_cast<long double>(c.article_count) * static_cast<long double>(before);
            before += c.article_count;
        }
        pairs *= config.replications;
        if (pairs > static_cast<long double>(config.pair_budget)) {
            throw NumericError(fmt::format("per-pair sampling needs {:.0f} draws, over the budget of {}",
                                           static_cast<double>(pairs), config.pair_budget));
        }
    }

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers =
        std::min<unsigned>(config.threads ? config.threads : hw, static_cast<unsigned>(config.replications));

    std::vector<std::vector<SimulatedArticle>> results(static_cast<std::size_t>(config.replications));
    if (workers <= 1) {
        for (int r = 0; r < config.replications; ++r) {
            results[static_cast<std::size_t>(r)] = run_replication(config, corpus.cohorts, r);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int r = next++; r < config.replications; r = next++) {
                        results[static_cast<std::size_t>(r)] = run_replication(config, corpus.cohorts, r);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::size_t total = 0;
    for (const auto& r : results) total += r.size();
    corpus.articles.reserve(total);
    for (auto& r : results) {
        std::move(r.begin(), r.end(), std::back_inserter(corpus.articles));
    }
    return corpus;
}

std::vector<CohortLengthStats> empirical_length_stats(const SimulatedCorpus& corpus) {
    if (corpus.articles.empty()) throw DataQualityError("length statistics of an empty corpus");
    std::vector<std::vector<double>> lengths(corpus.cohorts.size());
    for (const auto& a : corpus.articles) lengths.at(a.cohort).push_back(static_cast<double>(a.reference_ages.size()));

    std::vector<CohortLengthStats> out;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        if (lengths[i].empty()) continue;
        CohortLengthStats s;
        s.time = corpus.cohorts[i].time;
        s.articles = static_cast<std::int64_t>(lengths[i].size());
        s.mean = stats::mean(lengths[i]);
        s.variance = stats::sample_variance(lengths[i]);
        const auto longest = static_cast<std::size_t>(*std::max_element(lengths[i].begin(), lengths[i].end()));
        s.histogram.assign(longest + 1, 0);
        for (double v : lengths[i]) ++s.histogram[static_cast<std::size_t>(v)];
        s.median = stats::median(std::move(lengths[i]));
        out.push_back(std::move(s));
    }
    return out;
}

model::AgeStatistics empirical_age_stats(const SimulatedCorpus& corpus, double at,
                                         std::span<const double> survival_ages) {
    const std::size_t cohort = corpus.cohort_at(at);
    std::vector<double> pool;
    for (const auto& a : corpus.articles) {
        if (a.cohort == cohort) pool.insert(pool.end(), a.reference_ages.begin(), a.reference_ages.end());
    }
    if (pool.empty()) {
        throw DataQualityError(fmt::format("no references in the cohort at time {}; age statistics undefined", at));
    }
    std::sort(pool.begin(), pool.end());

    model::AgeStatistics result;
    result.mean_age = stats::mean(pool);
    result.median_age = stats::median(pool);
    if (!survival_ages.empty()) {
        std::vector<model::SurvivalPoint> survival;
        const auto n = static_cast<double>(pool.size());
        for (double a : survival_ages) {
            const auto at_least = pool.end() - std::lower_bound(pool.begin(), pool.end(), a);
            survival.push_back({a, static_cast<double>(at_least) / n});
        }
        result.survival = std::move(survival);
    }
    return result;
}

std::string corpus_to_csv(const SimulatedCorpus& corpus) {
    std::string out = "publication_year,n_references,reference_ages\n";
    for (const auto& a : corpus.articles) {
        out += fmt::format("{},{},", a.publication_time, a.reference_ages.size());
        for (std::size_t k = 0; k < a.reference_ages.size(); ++k) {
            if (k) out.push_back(';');
            out += fmt::format("{}", a.reference_ages[k]);
        }
        out.push_back('\n');
    }
    return out;
}

SimulatedCorpus corpus_from_csv(const std::string& text, double t0, double dt) {
    const auto table = csv::parse(text, "corpus");
    const auto time_col = table.column("publication_year");
    const auto count_col = table.column("n_references");
    const auto ages_col = table.column("reference_ages");
    if (!time_col || !count_col || !ages_col) {
        throw DataQualityError("corpus CSV needs columns publication_year,n_references,reference_ages");
    }

    SimulatedCorpus corpus;
    corpus.t0 = t0;
    corpus.dt = dt;
    std::map<double, std::int64_t> sizes;
    std::vector<std::pair<double, std::vector<double>>> rows;
    for (const auto& row : table.rows) {
        const auto time = csv::parse_double(row.fields[*time_col]);
        const auto count = csv::parse_integer(row.fields[*count_col]);
        if (!time || !count || *count < 0) {
            throw DataQualityError(fmt::format("malformed CSV at corpus:{}: bad year or reference count", row.line));
        }
        std::vector<double> ages;
        std::string_view rest = row.fields[*ages_col];
        while (!rest.empty()) {
            const auto cut = rest.find(';');
            const auto age = csv::parse_double(rest.substr(0, cut));
            if (!age || *age < 0.0 || *age > *time - t0 + 1e-9) {
                throw DataQualityError(fmt::format("malformed CSV at corpus:{}: bad reference age", row.line));
            }
            ages.push_back(*age);
            if (cut == std::string_view::npos) break;
            rest.remove_prefix(cut + 1);
        }
        if (static_cast<std::int64_t>(ages.size()) != *count) {
            throw DataQualityError(
                fmt::format("malformed CSV at corpus:{}: n_references disagrees with the age list", row.line));
        }
        ++sizes[*time];
        rows.emplace_back(*time, std::move(ages));
    }
    std::map<double, std::size_t> index;
    for (const auto& [time, size] : sizes) {
        index[time] = corpus.cohorts.size();
        corpus.cohorts.push_back({time, size});
    }
    for (auto& [time, ages] : rows) corpus.articles.push_back({0, index[time], time, std::move(ages)});
    return corpus;
}

}  // namespace refgrowth::montecarlo
