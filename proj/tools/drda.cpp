// Command-line front end: synth, run, table, expert.

#include "drda/harness.hpp"
#include "drda/interpolation.hpp"
#include "drda/ir_experts.hpp"
#include "drda/moments.hpp"
#include "drda/si_experts.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNonConvergence = 3;

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find_first_of(",; ", pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) {
            double v = 0.0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
                throw drda::ConfigError(what + ": not a number: " + item);
            }
            out.push_back(v);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

drda::MomentPair parse_moments(const std::string& mean_text, const std::string& cov_text, const std::string& what) {
    const auto mean = parse_numbers(mean_text, what + " mean");
    const auto cov = parse_numbers(cov_text, what + " covariance");
    const auto p = static_cast<Eigen::Index>(mean.size());
    if (p < 2) throw drda::ConfigError(what + " mean needs at least two entries (features and response)");
    if (static_cast<Eigen::Index>(cov.size()) != p * p) {
        throw drda::ConfigError(what + " covariance needs " + std::to_string(p * p) + " row-major entries");
    }
    drda::MomentPair m;
    m.mean = Eigen::Map<const drda::Vector>(mean.data(), p);
    m.cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cov.data(), p, p);
    drda::validate(m);
    return m;
}

void print_beta(const drda::Vector& beta) {
    std::cout << "beta =";
    for (Eigen::Index i = 0; i < beta.size(); ++i) std::cout << ' ' << drda::format_double(beta(i));
    std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust expert families for domain adaptation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic source/target CSV");
    std::uint64_t synth_seed = 0;
    std::size_t synth_d = 5;
    std::size_t n_source = 200;
    std::size_t n_target = 1200;
    drda::SynthShift shift;
    std::string synth_out;
    synth->add_option("--seed", synth_seed);
    synth->add_option("--d", synth_d, "number of features");
    synth->add_option("--n-source", n_source);
    synth->add_option("--n-target", n_target);
    synth->add_option("--mean-shift", shift.mean_shift);
    synth->add_option("--cov-scale", shift.cov_scale, "target covariance is (1 + cov_scale) I");
    synth->add_option("--rotation", shift.coef_rotation, "coefficient rotation angle in radians");
    synth->add_option("--noise", shift.noise, "response noise standard deviation");
    synth->add_option("--out", synth_out, "output CSV path")->required();

    // run
    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    std::string config_path;
    std::string out_dir = "results";
    unsigned workers = 1;
    run->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--workers", workers, "replication worker threads (0 = hardware concurrency)");

    // table
    auto* table = app.add_subcommand("table", "Re-render the results table from a runs file");
    std::string runs_path;
    std::string checkpoints_text = "5,10,50,100";
    std::string dataset = "dataset";
    std::string table_out;
    table->add_option("--runs", runs_path)->required()->check(CLI::ExistingFile);
    table->add_option("--checkpoints", checkpoints_text);
    table->add_option("--dataset", dataset);
    table->add_option("--out", table_out, "write here instead of stdout");

    // expert
    auto* expert = app.add_subcommand("expert", "Solve one expert from moments given on the command line");
    std::string method;
    std::string source_mean;
    std::string source_cov;
    std::string target_mean;
    std::string target_cov;
    double lambda = 1.0;
    double rho = 0.1;
    double rho_s = 0.1;
    std::optional<double> rho_t;
    expert->add_option("--method", method)->required()->check(CLI::IsMember({"IR-KL", "IR-WASS", "SI-KL", "SI-WASS"}));
    expert->add_option("--source-mean", source_mean, "comma-separated (features..., response)")->required();
    expert->add_option("--source-cov", source_cov, "row-major, comma-separated")->required();
    expert->add_option("--target-mean", target_mean)->required();
    expert->add_option("--target-cov", target_cov)->required();
    expert->add_option("--lambda", lambda, "IR: interpolation weight on the source");
    expert->add_option("--rho", rho, "IR: ambiguity radius");
    expert->add_option("--rho-s", rho_s, "SI: source radius");
    expert->add_option("--rho-t", rho_t, "SI: target radius (default: minimum + rho_s / 2)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (synth->parsed()) {
            const auto data = drda::synth_generate(synth_seed, synth_d, n_source, n_target, shift);
            drda::write_csv(synth_out, data.source, data.target);
            std::cout << "wrote " << synth_out << '\n';
            print_beta(data.beta_source);
            print_beta(data.beta_target);
            return 0;
        }
        if (run->parsed()) {
            const auto cfg = drda::load_config(config_path);
            if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
            const auto out = drda::run_configured(cfg, workers);
            const auto files = drda::emit_outputs(out, cfg, out_dir);
            std::cout << drda::format_table(out.table);
            std::cout << "wrote " << files.table.string() << ", " << files.curves.string() << ", "
                      << files.runs.string() << ", " << files.manifest.string() << '\n';
            if (!out.all_converged) {
                std::cerr << "warning: at least one expert did not converge";
                if (out.dropped_experts > 0) std::cerr << " (" << out.dropped_experts << " dropped, see manifest)";
                std::cerr << '\n';
                return kNonConvergence;
            }
            return 0;
        }
        if (table->parsed()) {
            const auto runs = drda::read_runs(runs_path);
            if (runs.empty()) throw drda::DataError("runs file is empty");
            std::vector<std::string> methods;
            for (const auto& r : runs) {
                if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
            }
            std::vector<std::size_t> cps;
            for (double v : parse_numbers(checkpoints_text, "checkpoints")) {
                if (!(v >= 1.0) || v != std::floor(v)) throw drda::ConfigError("checkpoints must be positive integers");
                cps.push_back(static_cast<std::size_t>(v));
            }
            const std::string text = drda::format_table(drda::make_table(runs, methods, cps, dataset));
            if (table_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream os(table_out);
                os << text;
                if (!os) throw drda::DataError("cannot write " + table_out);
            }
            return 0;
        }
        if (expert->parsed()) {
            const auto source = parse_moments(source_mean, source_cov, "source");
            const auto target = parse_moments(target_mean, target_cov, "target");
            if (source.dim() != target.dim()) throw drda::ConfigError("source and target dimensions differ");
            bool converged = true;
            if (method == "IR-KL" || method == "IR-WASS") {
                const bool kl = method == "IR-KL";
                const auto center = kl ? drda::kl_barycenter(source, target, lambda)
                                       : drda::wasserstein_barycenter(source, target, lambda);
                const auto sol = kl ? drda::solve_ir_kl(center, rho) : drda::solve_ir_wasserstein(center, rho);
                print_beta(sol.expert.beta);
                std::cout << "worst_case_loss = " << drda::format_double(sol.objective) << '\n'
                          << "gradient_norm = " << drda::format_double(sol.residual) << '\n'
                          << "iterations = " << sol.iterations << '\n';
                converged = sol.converged;
            } else {
                const bool kl = method == "SI-KL";
                drda::SiConfig cfg;
                cfg.rho_s = rho_s;
                cfg.rho_t = rho_t ? *rho_t
                                  : (kl ? drda::min_radius_kl(source, target, rho_s)
                                        : drda::min_radius_wasserstein(source, target, rho_s)) +
                                        0.5 * rho_s;
                const auto sol = kl ? drda::solve_si_kl(source, target, cfg) : drda::solve_si_wasserstein(source, target, cfg);
                print_beta(sol.beta.beta);
                std::cout << "rho_t = " << drda::format_double(cfg.rho_t) << '\n'
                          << "tau = " << drda::format_double(sol.tau) << '\n'
                          << "kkt_residual = " << drda::format_double(sol.kkt_residual) << '\n';
                converged = sol.converged;
            }
            std::cout << "converged = " << (converged ? "true" : "false") << '\n';
            return converged ? 0 : kNonConvergence;
        }
    } catch (const drda::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const drda::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const drda::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNonConvergence;
    }
    return kUsage;
}
