#include "drda/harness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace drda {

const std::vector<std::string>& all_methods() {
    static const std::vector<std::string> names{"IR-KL", "IR-WASS", "SI-KL", "SI-WASS", "CC-L",  "CC-TL",
                                                "CC-SL", "CC-TE",   "CC-SE", "RWS",     "LSE-T", "LSE-T&S"};
    return names;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: " + v);
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": not a nonnegative integer: " + v);
    }
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(parse_uint(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError(key + ": expected true/false, got " + v);
}

bool is_auto(const std::string& v) { return v == "auto"; }

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"family_size", [](auto& c, auto& k, auto& v) { c.family_size = parse_size(k, v); }},
        {"eta", [](auto& c, auto& k, auto& v) { c.eta = parse_real(k, v); }},
        {"upsilon", [](auto& c, auto& k, auto& v) { c.upsilon = parse_real(k, v); }},
        {"n_target_train",
         [](auto& c, auto& k, auto& v) {
             c.n_target_train = is_auto(v) ? std::nullopt : std::optional<std::size_t>(parse_size(k, v));
         }},
        {"stream_length", [](auto& c, auto& k, auto& v) { c.stream_length = parse_size(k, v); }},
        {"replications", [](auto& c, auto& k, auto& v) { c.replications = parse_size(k, v); }},
        {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_uint(k, v); }},
        {"standardize",
         [](auto& c, auto& k, auto& v) {
             c.standardize = is_auto(v) ? std::nullopt : std::optional<bool>(parse_bool(k, v));
         }},
        {"epsilon",
         [](auto& c, auto& k, auto& v) {
             c.epsilon = is_auto(v) ? std::nullopt : std::optional<double>(parse_real(k, v));
         }},
        {"ir_radius_rule", [](auto& c, auto& k, auto& v) { c.ir_radius_rule = parse_real(k, v); }},
        {"si_radius_rule", [](auto& c, auto& k, auto& v) { c.si_radius_rule = parse_real(k, v); }},
        {"si_high_dim", [](auto& c, auto& k, auto& v) { c.si_high_dim = parse_size(k, v); }},
        {"si_high_dim_min_rho_s", [](auto& c, auto& k, auto& v) { c.si_high_dim_min_rho_s = parse_real(k, v); }},
        {"methods", [](auto& c, auto&, auto& v) { c.methods = split_list(v); }},
        {"checkpoints",
         [](auto& c, auto& k, auto& v) {
             c.checkpoints.clear();
             for (const auto& item : split_list(v)) c.checkpoints.push_back(parse_size(k, item));
         }},
        {"prediction_convention",
         [](auto& c, auto& k, auto& v) {
             if (v == "pre") {
                 c.convention = PredictionConvention::PreUpdate;
             } else if (v == "post") {
                 c.convention = PredictionConvention::PostUpdate;
             } else {
                 throw ConfigError(k + ": expected pre or post, got " + v);
             }
         }},
        {"dataset_name", [](auto& c, auto&, auto& v) { c.dataset_name = v; }},
        {"data_path", [](auto& c, auto&, auto& v) { c.data_path = v; }},
        {"response_column", [](auto& c, auto&, auto& v) { c.response_column = v; }},
        {"domain_column", [](auto& c, auto&, auto& v) { c.domain_column = v; }},
        {"domain_rule", [](auto& c, auto&, auto& v) { c.domain_rule = v; }},
        {"synth_seed", [](auto& c, auto& k, auto& v) { c.synth_seed = parse_uint(k, v); }},
        {"synth_d", [](auto& c, auto& k, auto& v) { c.synth_d = parse_size(k, v); }},
        {"synth_n_source", [](auto& c, auto& k, auto& v) { c.synth_n_source = parse_size(k, v); }},
        {"synth_n_target", [](auto& c, auto& k, auto& v) { c.synth_n_target = parse_size(k, v); }},
        {"synth_mean_shift", [](auto& c, auto& k, auto& v) { c.synth_shift.mean_shift = parse_real(k, v); }},
        {"synth_cov_scale", [](auto& c, auto& k, auto& v) { c.synth_shift.cov_scale = parse_real(k, v); }},
        {"synth_coef_rotation", [](auto& c, auto& k, auto& v) { c.synth_shift.coef_rotation = parse_real(k, v); }},
        {"synth_noise", [](auto& c, auto& k, auto& v) { c.synth_shift.noise = parse_real(k, v); }},
    };
    return table;
}

void check(const ExperimentConfig& c) {
    if (c.family_size < 2) throw ConfigError("family_size must be at least 2");
    if (c.eta < 0.0) throw ConfigError("eta must be nonnegative");
    if (!(c.upsilon > 0.0)) throw ConfigError("upsilon must be positive");
    if (c.n_target_train && *c.n_target_train == 0) throw ConfigError("n_target_train must be positive");
    if (c.stream_length == 0) throw ConfigError("stream_length must be positive");
    if (c.replications == 0) throw ConfigError("replications must be positive");
    if (c.epsilon && !(*c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(c.ir_radius_rule > 0.0)) throw ConfigError("ir_radius_rule must be positive");
    if (!(c.si_radius_rule > 0.0)) throw ConfigError("si_radius_rule must be positive");
    if (c.checkpoints.empty()) throw ConfigError("checkpoints must not be empty");
    for (auto cp : c.checkpoints) {
        if (cp == 0) throw ConfigError("checkpoints must be positive");
    }
    if (c.synth_shift.cov_scale <= -1.0) throw ConfigError("synth_cov_scale must exceed -1");
    std::set<std::string> seen;
    for (const auto& m : c.methods) {
        if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end()) {
            throw ConfigError("unknown method: " + m);
        }
        if (!seen.insert(m).second) throw ConfigError("duplicate method: " + m);
    }
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.methods = all_methods();
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("unknown config key: " + key);
        if (!seen.insert(key).second) throw ConfigError("duplicate config key: " + key);
        it->second(cfg, key, value);
    }
    check(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
    auto size_str = [](std::size_t v) { return std::to_string(v); };
    auto bool_str = [](bool v) { return std::string(v ? "true" : "false"); };
    std::vector<std::string> cps;
    for (auto cp : c.checkpoints) cps.push_back(size_str(cp));

    std::ostringstream os;
    os << "family_size = " << c.family_size << '\n'
       << "eta = " << format_double(c.eta) << '\n'
       << "upsilon = " << format_double(c.upsilon) << '\n'
       << "n_target_train = " << (c.n_target_train ? size_str(*c.n_target_train) : "auto") << '\n'
       << "stream_length = " << c.stream_length << '\n'
       << "replications = " << c.replications << '\n'
       << "seed = " << c.seed << '\n'
       << "standardize = " << (c.standardize ? bool_str(*c.standardize) : "auto") << '\n'
       << "epsilon = " << (c.epsilon ? format_double(*c.epsilon) : "auto") << '\n'
       << "ir_radius_rule = " << format_double(c.ir_radius_rule) << '\n'
       << "si_radius_rule = " << format_double(c.si_radius_rule) << '\n'
       << "si_high_dim = " << c.si_high_dim << '\n'
       << "si_high_dim_min_rho_s = " << format_double(c.si_high_dim_min_rho_s) << '\n'
       << "methods = " << join(c.methods) << '\n'
       << "checkpoints = " << join(cps) << '\n'
       << "prediction_convention = " << (c.convention == PredictionConvention::PreUpdate ? "pre" : "post") << '\n'
       << "dataset_name = " << c.dataset_name << '\n'
       << "data_path = " << c.data_path << '\n'
       << "response_column = " << c.response_column << '\n'
       << "domain_column = " << c.domain_column << '\n'
       << "domain_rule = " << c.domain_rule << '\n'
       << "synth_seed = " << c.synth_seed << '\n'
       << "synth_d = " << c.synth_d << '\n'
       << "synth_n_source = " << c.synth_n_source << '\n'
       << "synth_n_target = " << c.synth_n_target << '\n'
       << "synth_mean_shift = " << format_double(c.synth_shift.mean_shift) << '\n'
       << "synth_cov_scale = " << format_double(c.synth_shift.cov_scale) << '\n'
       << "synth_coef_rotation = " << format_double(c.synth_shift.coef_rotation) << '\n'
       << "synth_noise = " << format_double(c.synth_shift.noise) << '\n';
    return os.str();
}

}  // namespace drda
