#include "drda/baselines.hpp"
#include "drda/harness.hpp"
#include "drda/interpolation.hpp"
#include "drda/ir_experts.hpp"
#include "drda/moments.hpp"
#include "drda/si_experts.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace drda {

FamilyContext make_context(const Dataset& source, const Dataset& target_train) {
    FamilyContext ctx;
    ctx.source = source;
    ctx.target_train = target_train;
    ctx.source_moments = ensure_positive_definite(empirical_moments(source));
    ctx.target_moments = ensure_positive_definite(empirical_moments(target_train), &ctx.target_jitter);
    return ctx;
}

namespace {

std::string label(const std::string& method, const std::string& param, double value) {
    std::ostringstream os;
    os.precision(6);
    os << method << ' ' << param << '=' << value;
    return os.str();
}

void add(FamilyBuild& out, Expert e, std::string name) {
    e.provenance = name;
    out.family.labels.push_back(std::move(name));
    out.family.experts.push_back(std::move(e));
}

template <class F>
void attempt(FamilyBuild& out, const std::string& name, F&& build) {
    try {
        build();
    } catch (const NumericError& e) {
        out.converged = false;
        out.dropped.push_back(name + ": " + e.what());
    }
}

bool is_sequential(const std::string& method) { return method == "LSE-T" || method == "LSE-T&S"; }

}  // namespace

FamilyBuild build_family(const FamilyContext& ctx, const ExperimentConfig& cfg, const std::string& method) {
    const int k = static_cast<int>(cfg.family_size);
    const auto& s = ctx.source_moments;
    const auto& t = ctx.target_moments;
    FamilyBuild out;
    out.family.name = method;

    if (method == "IR-KL" || method == "IR-WASS") {
        const DivergenceKind kind = method == "IR-KL" ? DivergenceKind::KlType : DivergenceKind::WassersteinType;
        const double rho = divergence(kind, t, s) / (cfg.ir_radius_rule * static_cast<double>(k));
        for (double lambda : schedule(1.0, 0.0, k, ScheduleKind::ExponentialIncreasing).values) {
            const std::string name = label(method, "lambda", lambda);
            attempt(out, name, [&] {
                const MomentPair center = barycenter(kind, s, t, lambda);
                const IrSolution sol =
                    kind == DivergenceKind::KlType ? solve_ir_kl(center, rho) : solve_ir_wasserstein(center, rho);
                out.converged = out.converged && sol.converged;
                add(out, sol.expert, name);
            });
        }
    } else if (method == "SI-KL" || method == "SI-WASS") {
        const bool kl = method == "SI-KL";
        const DivergenceKind kind = kl ? DivergenceKind::KlType : DivergenceKind::WassersteinType;
        const double dist = divergence(kind, t, s);
        double lo = kl ? 1e-3 : 1e-4;
        if (kl && static_cast<std::size_t>(s.dim() - 1) >= cfg.si_high_dim) lo = cfg.si_high_dim_min_rho_s;
        double hi = kl ? dist - 1.0 : dist;
        if (!(hi > lo)) hi = 10.0 * lo;
        for (double rho_s : schedule(lo, hi, k, ScheduleKind::ExponentialIncreasing).values) {
            attempt(out, label(method, "rho_s", rho_s), [&] {
                SiConfig sc;
                sc.rho_s = rho_s;
                const double minimum = kl ? min_radius_kl(s, t, rho_s) : min_radius_wasserstein(s, t, rho_s);
                sc.rho_t = minimum + cfg.si_radius_rule * rho_s;
                sc.epsilon = cfg.epsilon;
                const SiSolution sol = kl ? solve_si_kl(s, t, sc) : solve_si_wasserstein(s, t, sc);
                out.converged = out.converged && sol.converged;
                std::ostringstream name;
                name.precision(6);
                name << method << " rho_s=" << sc.rho_s << " rho_t=" << sc.rho_t;
                add(out, sol.beta, name.str());
            });
        }
    } else if (method.rfind("CC-", 0) == 0) {
        Schedule lambdas;
        if (method == "CC-L") {
            lambdas = schedule(0.0, 1.0, k, ScheduleKind::Linear);
        } else if (method == "CC-TL") {
            lambdas = schedule(0.0, 0.5, k, ScheduleKind::Linear);
        } else if (method == "CC-SL") {
            lambdas = schedule(0.5, 1.0, k, ScheduleKind::Linear);
        } else if (method == "CC-TE") {
            lambdas = schedule(0.0, 1.0, k, ScheduleKind::ExponentialIncreasing);
        } else if (method == "CC-SE") {
            lambdas = schedule(1.0, 0.0, k, ScheduleKind::ExponentialIncreasing);
        } else {
            throw ConfigError("unknown method: " + method);
        }
        const Expert bs = ridge(ctx.source, cfg.eta);
        const Expert bt = ridge(ctx.target_train, cfg.eta);
        for (double lambda : lambdas.values) add(out, convex_combination(bs, bt, lambda), label(method, "lambda", lambda));
    } else if (method == "RWS") {
        for (double h : schedule(0.5, 10.0, k, ScheduleKind::Linear).values) {
            const std::string name = label(method, "h", h);
            attempt(out, name, [&] {
                const KernelWeights kw = rws_weights(ctx.source, ctx.target_train, h);
                out.converged = out.converged && kw.converged;
                add(out, weighted_ridge(ctx.source, ctx.target_train, kw.weights, cfg.eta), name);
            });
        }
    } else {
        throw ConfigError("unknown expert family: " + method);
    }
    if (out.family.experts.empty()) {
        throw NumericError("every " + method + " expert failed; first: " + out.dropped.front());
    }
    out.family.validate();
    return out;
}

std::vector<double> normalize_row(const std::vector<double>& row) {
    if (row.empty()) return {};
    const auto first_min = std::min_element(row.begin(), row.end());
    const double m = *first_min;
    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] / m;
    out[static_cast<std::size_t>(first_min - row.begin())] = 1.0;
    return out;
}

ResultsTable make_table(const std::vector<RunResult>& runs, const std::vector<std::string>& methods,
                        const std::vector<std::size_t>& checkpoints, const std::string& dataset) {
    ResultsTable table;
    table.methods = methods;
    table.dataset = dataset;
    std::size_t horizon = std::numeric_limits<std::size_t>::max();
    for (const auto& r : runs) horizon = std::min(horizon, r.cumulative.size());
    for (auto cp : checkpoints) {
        if (cp >= 1 && cp <= horizon) table.checkpoints.push_back(cp);
    }
    if (table.checkpoints.empty() && horizon > 0 && horizon != std::numeric_limits<std::size_t>::max()) {
        table.checkpoints.push_back(horizon);
    }
    for (auto cp : table.checkpoints) {
        std::vector<double> row;
        for (const auto& m : methods) {
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& r : runs) {
                if (r.method != m) continue;
                sum += r.cumulative[cp - 1];
                ++count;
            }
            if (count == 0) throw DataError("no runs for method " + m);
            row.push_back(sum / static_cast<double>(count));
        }
        table.normalized.push_back(normalize_row(row));
        table.mean.push_back(std::move(row));
    }
    return table;
}

namespace {

struct Replication {
    std::vector<RunResult> runs;
    bool converged = true;
    double jitter = 0.0;
};

Replication run_replication(const ExperimentConfig& cfg, const Dataset& source, const Dataset& target,
                            std::size_t rep) {
    const std::size_t d = static_cast<std::size_t>(source.features());
    const std::size_t n_train = cfg.n_target_train.value_or(d);
    const std::size_t j = cfg.stream_length;

    // Independent stream per (seed, replication).
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> idx(target.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < n_train + j; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    Dataset train;
    train.domain = DomainTag::Target;
    for (std::size_t i = 0; i < n_train; ++i) train.rows.push_back(target.rows[idx[i]]);
    std::vector<Sample> stream;
    for (std::size_t i = n_train; i < n_train + j; ++i) stream.push_back(target.rows[idx[i]]);

    Replication out;
    const FamilyContext ctx = make_context(source, train);
    out.jitter = ctx.target_jitter;
    Dataset both = source;
    both.rows.insert(both.rows.end(), train.rows.begin(), train.rows.end());

    for (const auto& method : cfg.methods) {
        RunResult r;
        r.method = method;
        r.replication = rep;
        r.seed = cfg.seed;
        r.cumulative.reserve(j);
        if (is_sequential(method)) {
            const Dataset& base = method == "LSE-T" ? train : both;
            double total = 0.0;
            std::vector<Sample> prefix;
            prefix.reserve(j);
            for (const auto& s : stream) {
                const double err = sequential_ridge(base, prefix, cfg.eta).predict(s.x) - s.y;
                total += err * err;
                r.cumulative.push_back(total);
                prefix.push_back(s);
            }
        } else {
            const FamilyBuild fb = build_family(ctx, cfg, method);
            r.converged = fb.converged;
            r.dropped = fb.dropped;
            r.cumulative = cumulative_loss(fb.family, stream, cfg.upsilon, std::nullopt, cfg.convention).per_step;
        }
        out.converged = out.converged && r.converged;
        out.runs.push_back(std::move(r));
    }
    return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg, const Dataset& source_raw, const Dataset& target_raw,
                                unsigned workers) {
    if (source_raw.empty() || target_raw.empty()) throw DataError("empty dataset");
    if (source_raw.features() != target_raw.features()) throw DataError("source and target feature counts differ");
    if (cfg.methods.empty()) throw ConfigError("no methods requested");
    const std::size_t d = static_cast<std::size_t>(source_raw.features());
    const std::size_t n_train = cfg.n_target_train.value_or(d);
    if (n_train + cfg.stream_length > target_raw.size()) {
        throw DataError("insufficient target rows: need " + std::to_string(n_train + cfg.stream_length) + ", have " +
                        std::to_string(target_raw.size()));
    }

    ExperimentOutput out;
    out.standardized = cfg.standardize.value_or(false);
    Dataset source = source_raw;
    Dataset target = target_raw;
    if (out.standardized) {
        const Standardizer st = Standardizer::fit(source_raw);
        source = st.apply(source_raw);
        target = st.apply(target_raw);
    }

    const std::size_t reps = cfg.replications;
    std::vector<Replication> results(reps);
    std::vector<std::exception_ptr> errors(reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                results[r] = run_replication(cfg, source, target, r);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(reps)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (auto& rep : results) {
        out.all_converged = out.all_converged && rep.converged;
        out.max_target_jitter = std::max(out.max_target_jitter, rep.jitter);
        for (auto& r : rep.runs) {
            out.dropped_experts += r.dropped.size();
            out.runs.push_back(std::move(r));
        }
    }
    out.table = make_table(out.runs, cfg.methods, cfg.checkpoints, cfg.dataset_name);
    return out;
}

ExperimentOutput run_configured(const ExperimentConfig& cfg_in, unsigned workers) {
    ExperimentConfig cfg = cfg_in;
    if (cfg.data_path.empty()) {
        if (!cfg.standardize) cfg.standardize = false;
        const SynthData data =
            synth_generate(cfg.synth_seed, cfg.synth_d, cfg.synth_n_source, cfg.synth_n_target, cfg.synth_shift);
        return run_experiment(cfg, data.source, data.target, workers);
    }
    if (!cfg.standardize) cfg.standardize = true;
    const DomainSplit split = load_csv(cfg.data_path, cfg.response_column, cfg.domain_column, cfg.domain_rule);
    return run_experiment(cfg, split.source, split.target, workers);
}

}  // namespace drda
