#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "refgrowth/config.hpp"
#include "refgrowth/corpus.hpp"
#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"
#include "refgrowth/harvest.hpp"
#include "refgrowth/inference.hpp"
#include "refgrowth/model.hpp"
#include "refgrowth/montecarlo.hpp"

namespace refgrowth::cli {
namespace {

using ojson = nlohmann::ordered_json;
namespace mc = montecarlo;

std::string num(double v) { return fmt::format("{}", v); }

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

std::vector<double> parse_list(std::string_view text, std::string_view what) {
    std::vector<double> out;
    if (csv::trim(text).empty()) return out;
    while (true) {
        const auto cut = text.find(',');
        const auto item = csv::trim(text.substr(0, cut));
        const auto v = csv::parse_double(item);
        if (!v) throw ConfigError(fmt::format("{}: '{}' is not a number", what, item));
        out.push_back(*v);
        if (cut == std::string_view::npos) break;
        text.remove_prefix(cut + 1);
    }
    return out;
}

config::File load_config(RunContext& ctx, const std::string& path, std::string_view section) {
    if (path.empty()) return config::File::parse("", section);
    ctx.note_input(path);
    return config::File::load(path, section);
}

GrowthCurve pick_growth(RunContext& ctx, const std::string& flag, const config::File& file, std::string_view cmd) {
    if (!flag.empty()) {
        ctx.note_input(flag);
        return config::load_growth(flag);
    }
    if (file.has_section("growth")) return config::growth_from_section(file.section("growth"));
    throw ConfigError(fmt::format("{}: --growth or a [growth] section in --config is required", cmd));
}

CitabilityFunction pick_kernel(RunContext& ctx, const std::string& flag, const config::File& file, std::string_view cmd) {
    if (!flag.empty()) {
        ctx.note_input(flag);
        return config::load_kernel(flag);
    }
    if (file.has_section("kernel")) return config::kernel_from_section(file.section("kernel"));
    throw ConfigError(fmt::format("{}: --kernel or a [kernel] section in --config is required", cmd));
}

std::string age_column(double a) { return "survival_" + num(a); }

CLI::App* add_command(CLI::App& app, Registry& registry, const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    registry.push_back({sub, {}, {}});
    sub->add_option("--out", registry.back().out, "Output directory")->required();
    return sub;
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
    std::string config, growth, kernel, ages, survival_mode;
    double from_year = 0.0, to_year = 0.0, step = 1.0;
    CLI::Option *from = nullptr, *to = nullptr, *step_opt = nullptr, *ages_opt = nullptr, *mode_opt = nullptr;
};

void register_predict(CLI::App& app, Registry& registry) {
    auto o = std::make_shared<PredictOptions>();
    auto* sub = add_command(app, registry, "predict", "Tabulate the model predictions over a range of years");
    sub->add_option("--config", o->config, "Key-value file with [growth], [kernel] and [predict] sections");
    sub->add_option("--growth", o->growth, "Growth curve: key-value file, or a year,cumulative_count CSV");
    sub->add_option("--kernel", o->kernel, "Citability kernel key-value file");
    o->from = sub->add_option("--from-year", o->from_year, "First year (default: the curve origin)");
    o->to = sub->add_option("--to-year", o->to_year, "Last year");
    o->step_opt = sub->add_option("--step", o->step, "Year step (default 1)");
    o->ages_opt = sub->add_option("--ages", o->ages, "Comma-separated ages for survival columns, e.g. 1,2,5");
    o->mode_opt = sub->add_option("--survival-mode", o->survival_mode, "restricted (default) or full")
                      ->check(CLI::IsMember({"restricted", "full"}));

    registry.back().run = [o](RunContext& ctx, std::ostream& out) {
        const auto file = load_config(ctx, o->config, "predict");
        file.check_sections({"growth", "kernel", "predict", "simulation"});
        const auto sec = file.section("predict");
        sec.check_keys({"from_year", "to_year", "step", "ages", "survival_mode"});

        const auto growth = pick_growth(ctx, o->growth, file, "predict");
        const auto kernel = pick_kernel(ctx, o->kernel, file, "predict");

        double from = 0.0;
        if (given(o->from)) {
            from = o->from_year;
        } else if (const auto v = sec.number("from_year")) {
            from = *v;
        } else if (growth.has_finite_origin()) {
            from = growth.t0();
        } else {
            throw ConfigError("predict.from_year: required when the curve has no finite origin");
        }
        double to = 0.0;
        if (given(o->to)) {
            to = o->to_year;
        } else if (const auto v = sec.number("to_year")) {
            to = *v;
        } else {
            throw ConfigError("predict.to_year: required (--to-year)");
        }
        const double step = given(o->step_opt) ? o->step : sec.number("step").value_or(1.0);
        const auto ages = given(o->ages_opt) ? parse_list(o->ages, "--ages")
                                             : parse_list(sec.text("ages").value_or(""), "predict.ages");
        const std::string mode_name =
            given(o->mode_opt) ? o->survival_mode : std::string(csv::trim(sec.text("survival_mode").value_or("restricted")));
        if (mode_name != "restricted" && mode_name != "full") {
            throw ConfigError(fmt::format("predict.survival_mode: expected restricted or full, got '{}'", mode_name));
        }
        const auto mode = mode_name == "full" ? model::SurvivalMode::full : model::SurvivalMode::restricted;
        if (!(step > 0.0)) throw ConfigError("predict.step: must be > 0");
        if (to < from) throw ConfigError("predict.to_year: must not precede from_year");
        for (double a : ages) {
            if (a < 0.0) throw ConfigError("predict.ages: ages must be >= 0");
        }

        std::vector<std::string> header{"t", "P_star", "L_star", "A_star", "mean_age", "median_age"};
        for (double a : ages) header.push_back(age_column(a));
        std::string table = csv::join_row(header) + "\n";
        const auto n = static_cast<long long>(std::floor((to - from) / step + 1e-9));
        for (long long i = 0; i <= n; ++i) {
            const double t = from + static_cast<double>(i) * step;
            const double p = growth.restricted(t);
            std::vector<std::string> row{num(t), num(p), num(model::expected_list_length(kernel, growth, t)),
                                         num(model::expected_total_age(kernel, growth, t))};
            if (p > 0.0) {
                row.push_back(num(model::mean_reference_age(growth, t)));
                row.push_back(num(model::median_reference_age(growth, t)));
                for (double a : ages) row.push_back(num(model::age_survival_fraction(growth, t, a, mode)));
            } else {
                // No restricted literature yet: ages are undefined.
                row.resize(row.size() + 2 + ages.size());
            }
            table += csv::join_row(row) + "\n";
        }
        ctx.write_output("predict.csv", table);

        ojson cfg;
        cfg["growth"] = config::describe(growth);
        cfg["kernel"] = config::describe(kernel);
        cfg["from_year"] = from;
        cfg["to_year"] = to;
        cfg["step"] = step;
        cfg["ages"] = ages;
        cfg["survival_mode"] = mode_name;
        ctx.set_config(cfg);
        out << fmt::format("predict: {} rows -> {}\n", n + 1, (ctx.out_dir() / "predict.csv").string());
    };
}

// --------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string config, sampling_mode, field;
    std::uint64_t seed = 0;
    int replications = 1;
    unsigned threads = 0;
    double dt = 1.0, t_end = 0.0;
    bool skip_corpus = false;
    CLI::Option *seed_opt = nullptr, *reps = nullptr, *threads_opt = nullptr, *dt_opt = nullptr, *t_end_opt = nullptr,
                *mode = nullptr, *field_opt = nullptr;
};

void register_simulate(CLI::App& app, Registry& registry) {
    auto o = std::make_shared<SimulateOptions>();
    auto* sub = add_command(app, registry, "simulate", "Draw synthetic corpora under the Bernoulli citation process");
    sub->add_option("--config", o->config, "Key-value file with [growth], [kernel] and [simulation]")->required();
    o->seed_opt = sub->add_option("--seed", o->seed, "Master seed");
    o->reps = sub->add_option("--replications", o->replications, "Independent replications");
    o->threads_opt = sub->add_option("--threads", o->threads, "Worker threads (0 = all cores)");
    o->dt_opt = sub->add_option("--dt", o->dt, "Cohort width");
    o->t_end_opt = sub->add_option("--t-end", o->t_end, "Last cohort time");
    o->mode = sub->add_option("--sampling-mode", o->sampling_mode, "per_cohort_binomial or per_pair_bernoulli");
    o->field_opt = sub->add_option("--field", o->field, "Field label for articles.csv (default: simulated)");
    sub->add_flag("--skip-corpus", o->skip_corpus, "Do not write the per-article corpus.csv");

    registry.back().run = [o](RunContext& ctx, std::ostream& out) {
        ctx.note_input(o->config);
        const auto file = config::File::load(o->config, "simulation");
        auto cfg = config::simulation_from_file(file);
        if (given(o->seed_opt)) cfg.seed = o->seed;
        if (given(o->reps)) cfg.replications = o->replications;
        if (given(o->threads_opt)) cfg.threads = o->threads;
        if (given(o->dt_opt)) cfg.dt = o->dt;
        if (given(o->t_end_opt)) cfg.t_end = o->t_end;
        if (given(o->mode)) cfg.sampling_mode = mc::parse_sampling_mode(o->sampling_mode);
        const auto field = given(o->field_opt) ? o->field
                                               : std::string(csv::trim(file.section("simulation").text("field").value_or("simulated")));
        cfg.validate();

        auto described = config::describe(cfg);
        // Thread count never changes the output; keep it out of the record.
        described.erase("threads");
        described["field"] = field;
        ctx.set_config(described);
        ctx.set_seed(cfg.seed);

        const auto corpus = mc::simulate(cfg);
        if (!o->skip_corpus) ctx.write_output("corpus.csv", mc::corpus_to_csv(corpus));

        std::string articles = "id,year,field,n_references,n_pages\n";
        std::vector<std::int64_t> serial(static_cast<std::size_t>(corpus.replications), 0);
        const auto escaped_field = csv::escape(field);
        for (const auto& a : corpus.articles) {
            const auto year = static_cast<long long>(std::floor(a.publication_time + 1e-9));
            articles += fmt::format("sim-{}-{},{},{},{},\n", a.replication, serial[static_cast<std::size_t>(a.replication)]++,
                                    year, escaped_field, a.reference_ages.size());
        }
        ctx.write_output("articles.csv", articles);

        std::string pseries = "year,cumulative_count\n";
        for (std::size_t i = 0; i < corpus.cohorts.size(); ++i) {
            pseries += fmt::format("{},{}\n", num(corpus.cohorts[i].time), corpus.predecessors(i));
        }
        ctx.write_output("pseries.csv", pseries);

        const auto stats = mc::empirical_length_stats(corpus);
        std::string hist = "year,length,count\n", summary = "year,articles,mean,median,variance\n";
        for (const auto& s : stats) {
            for (std::size_t k = 0; k < s.histogram.size(); ++k) {
                hist += fmt::format("{},{},{}\n", num(s.time), k, s.histogram[k]);
            }
            summary += fmt::format("{},{},{},{},{}\n", num(s.time), s.articles, s.mean, s.median, s.variance);
        }
        ctx.write_output("lengths_hist.csv", hist);
        ctx.write_output("length_stats.csv", summary);
        out << fmt::format("simulate: {} articles in {} cohorts x {} replications -> {}\n", corpus.articles.size(),
                           corpus.cohorts.size(), corpus.replications, ctx.out_dir().string());
    };
}

// --------------------------------------------------------------- agestats

struct AgestatsOptions {
    std::string corpus, ages, growth;
    double at = 0.0, t0 = 0.0, dt = 1.0;
    CLI::Option *at_opt = nullptr, *t0_opt = nullptr;
};

void register_agestats(CLI::App& app, Registry& registry) {
    auto o = std::make_shared<AgestatsOptions>();
    auto* sub = add_command(app, registry, "agestats", "Reference-age statistics of a simulated corpus");
    sub->add_option("--corpus", o->corpus, "corpus.csv written by simulate")->required();
    o->at_opt = sub->add_option("--at", o->at, "Cohort time (default: the last cohort)");
    sub->add_option("--ages", o->ages, "Comma-separated ages for survival fractions");
    o->t0_opt = sub->add_option("--t0", o->t0, "Observation origin (default: the earliest cohort)");
    sub->add_option("--dt", o->dt, "Cohort width used by the simulation (default 1)");
    sub->add_option("--growth", o->growth, "Growth curve to add uniform-model predictions");

    registry.back().run = [o](RunContext& ctx, std::ostream& out) {
        const auto text = ctx.read_input(o->corpus);
        double t0 = o->t0;
        if (!given(o->t0_opt)) {
            const auto table = csv::parse(text, o->corpus);
            const auto col = table.column("publication_year");
            if (!col || table.rows.empty()) throw DataQualityError(fmt::format("{}: no articles", o->corpus));
            t0 = std::numeric_limits<double>::infinity();
            for (const auto& row : table.rows) {
                const auto v = csv::parse_double(row.fields[*col]);
                if (!v) throw DataQualityError(fmt::format("malformed CSV at {}:{}: bad publication_year", o->corpus, row.line));
                t0 = std::min(t0, *v);
            }
        }
        const auto corpus = mc::corpus_from_csv(text, t0, o->dt);
        if (corpus.cohorts.empty()) throw DataQualityError(fmt::format("{}: no articles", o->corpus));
        const double at = given(o->at_opt) ? o->at : corpus.cohorts.back().time;
        const auto ages = parse_list(o->ages, "--ages");
        const auto empirical = mc::empirical_age_stats(corpus, at, ages);

        std::optional<model::AgeStatistics> predicted;
        std::optional<GrowthCurve> growth;
        if (!o->growth.empty()) {
            ctx.note_input(o->growth);
            growth = config::load_growth(o->growth);
            predicted = model::uniform_age_statistics(*growth, at, ages);
        }

        auto cell = [&](auto getter) { return predicted ? num(getter(*predicted)) : std::string(); };
        std::string table = "statistic,empirical,predicted\n";
        table += fmt::format("mean_age,{},{}\n", num(empirical.mean_age), cell([](const auto& s) { return s.mean_age; }));
        table += fmt::format("median_age,{},{}\n", num(empirical.median_age),
                             cell([](const auto& s) { return s.median_age; }));
        ojson j;
        j["at"] = at;
        j["t0"] = t0;
        j["dt"] = o->dt;
        ojson emp{{"mean_age", empirical.mean_age}, {"median_age", empirical.median_age}};
        ojson pred = predicted ? ojson{{"model", "uniform"}, {"mean_age", predicted->mean_age}, {"median_age", predicted->median_age}}
                               : ojson(nullptr);
        if (!ages.empty()) {
            emp["survival"] = ojson::array();
            if (predicted) pred["survival"] = ojson::array();
            for (std::size_t i = 0; i < ages.size(); ++i) {
                const double e = (*empirical.survival)[i].fraction;
                emp["survival"].push_back({{"age", ages[i]}, {"fraction", e}});
                std::string p;
                if (predicted) {
                    p = num((*predicted->survival)[i].fraction);
                    pred["survival"].push_back({{"age", ages[i]}, {"fraction", (*predicted->survival)[i].fraction}});
                }
                table += fmt::format("{},{},{}\n", age_column(ages[i]), num(e), p);
            }
        }
        j["empirical"] = emp;
        j["predicted"] = pred;
        ctx.write_output("agestats.csv", table);
        ctx.write_output("agestats.json", j.dump(2) + "\n");

        ojson cfg{{"corpus", std::filesystem::absolute(o->corpus).string()}, {"at", at}, {"t0", t0}, {"dt", o->dt}, {"ages", ages}};
        if (growth) cfg["growth"] = config::describe(*growth);
        ctx.set_config(cfg);
        out << fmt::format("agestats: mean age {} at {}\n", num(empirical.mean_age), num(at));
    };
}

// -------------------------------------------------------------------- fit

struct FitOptions {
    std::string config, aggregate, pseries, mode, stat, field;
    CLI::Option *mode_opt = nullptr, *stat_opt = nullptr, *field_opt = nullptr;
};

inference::YearSeries aggregate_series(const std::vector<corpus::YearlyAggregate>& rows, const std::string& stat,
                                       std::optional<std::string> field) {
    std::set<std::string> fields;
    for (const auto& r : rows) fields.insert(r.field);
    if (!field) {
        if (fields.size() > 1) {
            throw ConfigError(fmt::format("fit.field: the aggregate holds {} fields, choose one with --field", fields.size()));
        }
    } else if (!fields.count(*field)) {
        throw DataQualityError(fmt::format("fit.field: no aggregate rows for field '{}'", *field));
    }
    inference::YearSeries series;
    for (const auto& r : rows) {
        if (field && r.field != *field) continue;
        if (!series.empty() && r.year <= series.back().year) {
            throw DataQualityError(fmt::format("aggregate: year {} appears twice or out of order", r.year));
        }
        series.push_back({r.year, stat == "median" ? r.median_refs : r.mean_refs});
    }
    return series;
}

void register_fit(CLI::App& app, Registry& registry) {
    auto o = std::make_shared<FitOptions>();
    auto* sub = add_command(app, registry, "fit", "Least-squares fits of L, P and t");
    sub->add_option("--config", o->config, "Key-value file with a [fit] section");
    sub->add_option("--aggregate", o->aggregate, "Yearly aggregate CSV from ingest");
    sub->add_option("--pseries", o->pseries, "Two-column year,cumulative_count CSV");
    o->mode_opt = sub->add_option("--mode", o->mode, "LvT, PvT, LvP or increment");
    o->stat_opt = sub->add_option("--stat", o->stat, "mean (default) or median of the reference counts");
    o->field_opt = sub->add_option("--field", o->field, "Field label to fit when the aggregate holds several");

    registry.back().run = [o](RunContext& ctx, std::ostream& out) {
        const auto file = load_config(ctx, o->config, "fit");
        file.check_sections({"fit"});
        const auto sec = file.section("fit");
        sec.check_keys({"mode", "stat", "field", "aggregate", "pseries"});
        const auto mode = given(o->mode_opt) ? o->mode : std::string(csv::trim(sec.text("mode").value_or("")));
        const auto stat = given(o->stat_opt) ? o->stat : std::string(csv::trim(sec.text("stat").value_or("mean")));
        std::optional<std::string> field;
        if (given(o->field_opt)) {
            field = o->field;
        } else if (sec.has("field")) {
            field = std::string(csv::trim(*sec.text("field")));
        }
        if (mode != "LvT" && mode != "PvT" && mode != "LvP" && mode != "increment") {
            throw ConfigError(fmt::format("fit.mode: expected LvT, PvT, LvP or increment, got '{}'", mode));
        }
        if (stat != "mean" && stat != "median") throw ConfigError(fmt::format("fit.stat: expected mean or median, got '{}'", stat));

        auto path_of = [&](const std::string& flag, const std::string& key) -> std::string {
            if (!flag.empty()) return flag;
            if (const auto p = sec.path(key)) return p->string();
            return "";
        };
        const auto agg_path = path_of(o->aggregate, "aggregate"), p_path = path_of(o->pseries, "pseries");
        const bool need_l = mode == "LvT" || mode == "LvP", need_p = mode != "LvT";
        if (need_l && agg_path.empty()) throw ConfigError(fmt::format("fit.aggregate: required for mode {}", mode));
        if (need_p && p_path.empty()) throw ConfigError(fmt::format("fit.pseries: required for mode {}", mode));

        inference::YearSeries L, P;
        if (need_l) L = aggregate_series(corpus::parse_aggregates(ctx.read_input(agg_path), agg_path), stat, field);
        if (need_p) P = inference::parse_year_series_csv(ctx.read_input(p_path), p_path);

        std::vector<double> x, y;
        inference::FitResult fit;
        auto unzip = [&](const inference::YearSeries& s) {
            for (const auto& v : s) {
                x.push_back(v.year);
                y.push_back(v.value);
            }
        };
        if (mode == "LvT") {
            unzip(L);
            fit = inference::ols_fit(x, y);
        } else if (mode == "PvT") {
            unzip(P);
            fit = inference::ols_fit(x, y);
        } else if (mode == "increment") {
            unzip(inference::yearly_increment(P));
            fit = inference::ols_fit(x, y);
        } else {
            std::map<int, double> by_year;
            for (const auto& v : P) by_year[v.year] = v.value;
            inference::YearSeries aligned;
            for (const auto& v : L) {
                const auto it = by_year.find(v.year);
                if (it == by_year.end()) {
                    throw DataQualityError(fmt::format("fit: year {} is in the aggregate but not in the P series", v.year));
                }
                aligned.push_back({v.year, it->second});
            }
            fit = inference::fit_affine_q(aligned, L);
            for (std::size_t i = 0; i < L.size(); ++i) {
                x.push_back(aligned[i].value);
                y.push_back(L[i].value);
            }
        }

        ojson report;
        report["mode"] = mode;
        report["stat"] = stat;
        report["field"] = field ? ojson(*field) : ojson(nullptr);
        const auto fields = ojson::parse(inference::fit_report_json(fit));
        for (const auto& [k, v] : fields.items()) report[k] = v;
        if (mode == "LvP") report["q_hat"] = fit.slope;
        ctx.write_output("fit.json", report.dump(2) + "\n");
        ctx.write_output("fit_plot.csv", inference::fit_plot_csv(x, y, fit));
        ctx.set_config({{"mode", mode}, {"stat", stat}, {"field", report["field"]},
                        {"aggregate", agg_path.empty() ? ojson(nullptr) : ojson(std::filesystem::absolute(agg_path).string())},
                        {"pseries", p_path.empty() ? ojson(nullptr) : ojson(std::filesystem::absolute(p_path).string())}});
        out << fmt::format("fit {}: slope {} intercept {} R^2 {} (n = {})\n", mode, num(fit.slope), num(fit.intercept),
                           num(fit.r_squared), fit.n_points);
    };
}

// ---------------------------------------------------------------- distfit

struct DistfitOptions {
    std::string hist, ntrials;
    double year = 0.0, min_expected = 5.0, alpha = 0.01;
    CLI::Option* year_opt = nullptr;
};

std::map<double, inference::LengthHistogram> read_histograms(const std::string& text, const std::string& source) {
    const auto table = csv::parse(text, source);
    const auto year = table.column("year"), length = table.column("length"), count = table.column("count");
    if (!length || !count) throw DataQualityError(fmt::format("{}: expected columns [year,]length,count", source));
    std::map<double, std::vector<std::int64_t>> counts;
    for (const auto& row : table.rows) {
        const auto y = year ? csv::parse_double(row.fields[*year]) : std::optional<double>(0.0);
        const auto l = csv::parse_integer(row.fields[*length]);
        const auto c = csv::parse_integer(row.fields[*count]);
        if (!y || !l || !c || *l < 0 || *c < 0) {
            throw DataQualityError(fmt::format("malformed CSV at {}:{}: bad histogram row", source, row.line));
        }
        auto& v = counts[*y];
        if (static_cast<std::size_t>(*l) >= v.size()) v.resize(static_cast<std::size_t>(*l) + 1, 0);
        v[static_cast<std::size_t>(*l)] += *c;
    }
    std::map<double, inference::LengthHistogram> out;
    for (auto& [y, v] : counts) out.emplace(y, inference::LengthHistogram::from_counts(y, std::move(v)));
    return out;
}

void register_distfit(CLI::App& app, Registry& registry) {
    auto o = std::make_shared<DistfitOptions>();
    auto* sub = add_command(app, registry, "distfit", "Binomial fit and chi-square test of a reference-length histogram");
    sub->add_option("--hist", o->hist, "CSV with columns year,length,count (year optional)")->required();
    sub->add_option("--ntrials", o->ntrials, "Number of trials, or a year,cumulative_count CSV to look it up")->required();
    o->year_opt = sub->add_option("--year", o->year, "Histogram year (default: the last one)");
    sub->add_option("--min-expected", o->min_expected, "Pool bins until each expects this many (default 5)");
    sub->add_option("--alpha", o->alpha, "Significance level for the accept flag (default 0.01)");

    registry.back().run = [o](RunContext& ctx, std::ostream& out) {
        const auto hists = read_histograms(ctx.read_input(o->hist), o->hist);
        if (hists.empty()) throw DataQualityError(fmt::format("{}: empty histogram", o->hist));
        double year = hists.rbegin()->first;
        if (given(o->year_opt)) year = o->year;
        const auto it = hists.find(year);
        if (it == hists.end()) throw DataQualityError(fmt::format("{}: no histogram for year {}", o->hist, num(year)));
        const auto& hist = it->second;

        std::int64_t n = 0;
        if (const auto v = csv::parse_integer(o->ntrials)) {
            n = *v;
        } else {
            const auto series = inference::parse_year_series_csv(ctx.read_input(o->ntrials), o->ntrials);
            const auto match = std::find_if(series.begin(), series.end(), [&](const auto& s) { return s.year == year; });
            if (match == series.end()) {
                throw DataQualityError(fmt::format("{}: no value for year {}", o->ntrials, num(year)));
            }
            if (std::abs(match->value - std::round(match->value)) > 1e-6) {
                throw DataQualityError(fmt::format("{}: value for year {} is not a whole count", o->ntrials, num(year)));
            }
            n = std::llround(match->value);
        }
        if (n < 1) throw ConfigError("distfit.ntrials: must be >= 1");
        if (!(o->alpha > 0.0 && o->alpha < 1.0)) throw ConfigError("distfit.alpha: must lie in (0, 1)");

        const auto fit = inference::fit_binomial(hist, n, o->min_expected);
        ojson j;
        j["year"] = year;
        j["n_trials"] = n;
        j["articles"] = hist.total;
        j["p_hat"] = fit.p_hat;
        j["standard_error"] = fit.standard_error;
        j["gof_statistic"] = fit.gof_statistic;
        j["degrees_of_freedom"] = fit.degrees_of_freedom;
        j["bins"] = fit.bins;
        j["p_value"] = fit.p_value;
        j["alpha"] = o->alpha;
        j["accepted"] = fit.p_value > o->alpha;
        ctx.write_output("distfit.json", j.dump(2) + "\n");

        const auto max_k = static_cast<std::int64_t>(hist.counts.size()) - 1;
        const auto expected = inference::binomial_expected_counts(n, fit.p_hat, static_cast<double>(hist.total), max_k);
        std::string table = "length,observed,expected\n";
        for (std::int64_t k = 0; k <= max_k; ++k) {
            table += fmt::format("{},{},{}\n", k, hist.counts[static_cast<std::size_t>(k)], expected[static_cast<std::size_t>(k)]);
        }
        ctx.write_output("distfit.csv", table);
        ctx.set_config({{"hist", std::filesystem::absolute(o->hist).string()}, {"ntrials", o->ntrials}, {"year", year},
                        {"min_expected", o->min_expected}, {"alpha", o->alpha}});
        out << fmt::format("distfit: p_hat {} (se {}), chi-square {} on {} dof, p = {}\n", num(fit.p_hat),
                           num(fit.standard_error), num(fit.gof_statistic), fit.degrees_of_freedom, num(fit.p_value));
    };
}

// ----------------------------------------------------------------- ingest

struct IngestOptions {
    std::string config, in;
    std::int64_t min_refs = 5;
    int from_year = 0, to_year = 0;
    CLI::Option *min_opt = nullptr, *from = nullptr, *to = nullptr;
};

void register_ingest(CLI::App& app, Registry& registry) {
    auto o = std::make_shared<IngestOptions>();
    auto* sub = add_command(app, registry, "ingest", "Filter an article CSV and aggregate it by year and field");
    sub->add_option("--config", o->config, "Key-value file with an [ingest] section");
    sub->add_option("--in", o->in, "CSV with columns id,year,field,n_references,n_pages");
    o->min_opt = sub->add_option("--min-refs", o->min_refs, "Drop articles with fewer references (default 5)");
    o->from = sub->add_option("--from-year", o->from_year, "First year kept");
    o->to = sub->add_option("--to-year", o->to_year, "Last year kept");

    registry.back().run = [o](RunContext& ctx, std::ostream& out) {
        const auto file = load_config(ctx, o->config, "ingest");
        file.check_sections({"ingest"});
        const auto sec = file.section("ingest");
        sec.check_keys({"in", "min_refs", "from_year", "to_year"});
        std::string in = o->in;
        if (in.empty()) {
            if (const auto p = sec.path("in")) in = p->string();
        }
        if (in.empty()) throw ConfigError("ingest.in: required (--in)");

        corpus::FilterOptions opt;
        opt.min_refs = given(o->min_opt) ? o->min_refs : sec.integer("min_refs").value_or(5);
        if (opt.min_refs < 0) throw ConfigError("ingest.min_refs: must be >= 0");
        std::optional<long long> from = given(o->from) ? std::optional<long long>(o->from_year) : sec.integer("from_year");
        std::optional<long long> to = given(o->to) ? std::optional<long long>(o->to_year) : sec.integer("to_year");
        if (from || to) {
            opt.window = corpus::YearWindow{static_cast<int>(from.value_or(opt.plausible.first)),
                                            static_cast<int>(to.value_or(opt.plausible.last))};
            if (opt.window->last < opt.window->first) throw ConfigError("ingest.to_year: must not precede from_year");
        }

        const auto text = ctx.read_input(in);
        const auto result = corpus::filter(corpus::parse_articles(text, in, opt.plausible), opt);
        ctx.write_output("filtered.csv", corpus::articles_to_csv(result.records));
        std::string aggregate = "year,field,article_count,mean_refs,median_refs\n";
        if (!result.records.empty()) aggregate = corpus::aggregates_to_csv(corpus::aggregate_yearly(result.records));
        ctx.write_output("aggregate.csv", aggregate);

        ojson report;
        report["rows_read"] = result.rows_read;
        report["retained"] = result.records.size();
        report["dropped"] = {{"missing_year", result.dropped.missing_year},
                             {"missing_references", result.dropped.missing_references},
                             {"too_few_references", result.dropped.too_few_references},
                             {"outside_window", result.dropped.outside_window}};
        ctx.write_output("ingest_report.json", report.dump(2) + "\n");

        ojson cfg{{"in", std::filesystem::absolute(in).string()}, {"min_refs", opt.min_refs}};
        cfg["window"] = opt.window ? ojson{opt.window->first, opt.window->last} : ojson(nullptr);
        ctx.set_config(cfg);
        out << fmt::format("ingest: kept {} of {} rows ({} dropped)\n", result.records.size(), result.rows_read,
                           result.dropped.total());
    };
}

// ---------------------------------------------------------------- harvest

struct HarvestCliOptions {
    std::string config, dois, endpoint, cache, field;
    double rate = 1.0;
    int concurrency = 2, retries = 4, timeout_ms = 10000;
    bool offline = false;
    CLI::Option *endpoint_opt = nullptr, *rate_opt = nullptr, *cache_opt = nullptr, *conc = nullptr, *retries_opt = nullptr,
                *timeout = nullptr, *field_opt = nullptr, *offline_opt = nullptr;
};

void register_harvest(CLI::App& app, Registry& registry) {
    auto o = std::make_shared<HarvestCliOptions>();
    auto* sub = add_command(app, registry, "harvest", "Fetch reference counts and page spans per DOI");
    sub->add_option("--config", o->config, "Key-value file with a [harvest] section");
    sub->add_option("--dois", o->dois, "File with one DOI per line")->required();
    o->endpoint_opt = sub->add_option("--endpoint", o->endpoint, "Base URL; the DOI is appended as a path ($REFGROWTH_ENDPOINT)");
    o->rate_opt = sub->add_option("--rate", o->rate, "Requests per second across workers ($REFGROWTH_RATE, default 1.0)");
    o->cache_opt = sub->add_option("--cache", o->cache, "Response cache directory ($REFGROWTH_CACHE)");
    o->conc = sub->add_option("--concurrency", o->concurrency, "Concurrent requests (default 2)");
    o->retries_opt = sub->add_option("--retries", o->retries, "Retries with exponential backoff (default 4)");
    o->timeout = sub->add_option("--timeout-ms", o->timeout_ms, "Per-request timeout in milliseconds");
    o->field_opt = sub->add_option("--field", o->field, "Field label for the harvested records");
    o->offline_opt = sub->add_flag("--offline", o->offline, "Serve from the cache only ($REFGROWTH_OFFLINE)");
    sub->footer("Resolution order: flag, environment variable, --config file, default.");

    registry.back().run = [o](RunContext& ctx, std::ostream& out) {
        const auto file = load_config(ctx, o->config, "harvest");
        file.check_sections({"harvest"});
        const auto sec = file.section("harvest");
        sec.check_keys({"endpoint", "rate", "cache", "concurrency", "retries", "timeout_ms", "field", "offline"});

        corpus::HarvestOptions h;
        if (const auto v = sec.text("endpoint")) h.endpoint = std::string(csv::trim(*v));
        if (const auto v = sec.number("rate")) h.rate_limit = *v;
        if (const auto v = sec.path("cache")) h.cache_dir = *v;
        if (const auto v = sec.integer("concurrency")) h.concurrency = static_cast<int>(*v);
        if (const auto v = sec.integer("retries")) h.max_retries = static_cast<int>(*v);
        if (const auto v = sec.integer("timeout_ms")) h.timeout = std::chrono::milliseconds(*v);
        if (const auto v = sec.text("field")) h.field_label = std::string(csv::trim(*v));
        if (const auto v = sec.boolean("offline")) h.offline = *v;
        h = corpus::apply_environment(h);
        if (given(o->endpoint_opt)) h.endpoint = o->endpoint;
        if (given(o->rate_opt)) h.rate_limit = o->rate;
        if (given(o->cache_opt)) h.cache_dir = o->cache;
        if (given(o->conc)) h.concurrency = o->concurrency;
        if (given(o->retries_opt)) h.max_retries = o->retries;
        if (given(o->timeout)) h.timeout = std::chrono::milliseconds(o->timeout_ms);
        if (given(o->field_opt)) h.field_label = o->field;
        if (given(o->offline_opt) && o->offline) h.offline = true;
        if (h.cache_dir) h.cache_dir = std::filesystem::absolute(*h.cache_dir).lexically_normal();

        const auto dois = corpus::parse_doi_list(ctx.read_input(o->dois));
        ctx.set_config({{"endpoint", h.endpoint},
                        {"rate", h.rate_limit},
                        {"cache_dir", h.cache_dir ? ojson(h.cache_dir->string()) : ojson(nullptr)},
                        {"concurrency", h.concurrency},
                        {"retries", h.max_retries},
                        {"field", h.field_label},
                        {"offline", h.offline}});
        const auto result = corpus::harvest_reference_counts(dois, h);

        ctx.write_output("harvested.csv", corpus::articles_to_csv(result.records));
        std::string failures = "doi,kind,detail\n";
        std::map<std::string, int> by_kind;
        for (const auto& f : result.failures) {
            failures += csv::join_row({f.doi, std::string(corpus::to_string(f.kind)), f.detail}) + "\n";
            ++by_kind[std::string(corpus::to_string(f.kind))];
        }
        ctx.write_output("harvest_failures.csv", failures);
        std::set<std::string> unique(dois.begin(), dois.end());
        ojson report{{"dois", dois.size()}, {"unique", unique.size()}, {"records", result.records.size()},
                     {"failures", by_kind}};
        ctx.write_output("harvest_report.json", report.dump(2) + "\n");
        ctx.extra()["replayable"] = h.cache_dir.has_value();
        out << fmt::format("harvest: {} records, {} failures, {} requests, {} cache hits\n", result.records.size(),
                           result.failures.size(), result.requests, result.cache_hits);
    };
}

}  // namespace

void register_commands(CLI::App& app, Registry& registry) {
    register_predict(app, registry);
    register_simulate(app, registry);
    register_agestats(app, registry);
    register_fit(app, registry);
    register_distfit(app, registry);
    register_ingest(app, registry);
    register_harvest(app, registry);
}

}  // namespace refgrowth::cli
