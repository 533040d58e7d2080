#include "drda/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace drda {

namespace {

std::vector<std::string> parse_csv_line(const std::string& line, std::size_t lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw DataError("line " + std::to_string(lineno) + ": unterminated quote");
    fields.push_back(cur);
    return fields;
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

bool to_number(const std::string& raw, double& out) {
    const std::string s = strip(raw);
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

enum class Op { Eq, Ne, Lt, Le, Gt, Ge };

struct Rule {
    Op op = Op::Eq;
    std::string text;
    double number = 0.0;

    bool matches(const std::string& raw) const {
        const std::string v = strip(raw);
        if (op == Op::Eq) return v == text;
        if (op == Op::Ne) return v != text;
        double x = 0.0;
        if (!to_number(v, x)) throw DataError("domain value is not numeric: " + v);
        switch (op) {
            case Op::Lt: return x < number;
            case Op::Le: return x <= number;
            case Op::Gt: return x > number;
            default: return x >= number;
        }
    }
};

Rule parse_rule(const std::string& rule, const std::string& domain_column) {
    static const std::vector<std::pair<std::string, Op>> ops{
        {"!=", Op::Ne}, {"<=", Op::Le}, {">=", Op::Ge}, {"=", Op::Eq}, {"<", Op::Lt}, {">", Op::Gt}};
    std::size_t best = std::string::npos;
    std::size_t len = 0;
    Op op = Op::Eq;
    for (const auto& [tok, o] : ops) {
        const auto pos = rule.find(tok);
        if (pos != std::string::npos && (pos < best || (pos == best && tok.size() > len))) {
            best = pos;
            len = tok.size();
            op = o;
        }
    }
    if (best == std::string::npos) throw ConfigError("domain rule has no operator: " + rule);
    const std::string column = strip(rule.substr(0, best));
    if (!column.empty() && column != domain_column) {
        throw ConfigError("domain rule names column '" + column + "' but the domain column is '" + domain_column + "'");
    }
    Rule r;
    r.op = op;
    r.text = strip(rule.substr(best + len));
    if (op != Op::Eq && op != Op::Ne && !to_number(r.text, r.number)) {
        throw ConfigError("ordering domain rule needs a numeric threshold: " + rule);
    }
    return r;
}

}  // namespace

DomainSplit load_csv(const std::filesystem::path& path, const std::string& response_column,
                     const std::string& domain_column, const std::string& domain_rule) {
    const Rule rule = parse_rule(domain_rule, domain_column);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("missing header row: " + path.string());
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = parse_csv_line(line, 1);
    for (auto& h : header) h = strip(h);

    std::ptrdiff_t resp = -1;
    std::ptrdiff_t dom = -1;
    std::vector<std::size_t> feature_cols;
    DomainSplit out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == response_column) {
            resp = static_cast<std::ptrdiff_t>(i);
        } else if (header[i] == domain_column) {
            dom = static_cast<std::ptrdiff_t>(i);
        } else {
            feature_cols.push_back(i);
            out.feature_names.push_back(header[i]);
        }
    }
    if (resp < 0) throw DataError("missing column: " + response_column);
    if (dom < 0) throw DataError("missing column: " + domain_column);
    if (feature_cols.empty()) throw DataError("no feature columns");
    out.source.domain = DomainTag::Source;
    out.target.domain = DomainTag::Target;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty() || strip(line) == "\r") continue;
        const auto fields = parse_csv_line(line, lineno);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        Sample s;
        s.x.resize(static_cast<Eigen::Index>(feature_cols.size()));
        for (std::size_t k = 0; k < feature_cols.size(); ++k) {
            double v = 0.0;
            if (!to_number(fields[feature_cols[k]], v)) {
                throw DataError("line " + std::to_string(lineno) + ", column " + header[feature_cols[k]] +
                                ": non-numeric cell '" + fields[feature_cols[k]] + "'");
            }
            s.x(static_cast<Eigen::Index>(k)) = v;
        }
        if (!to_number(fields[static_cast<std::size_t>(resp)], s.y)) {
            throw DataError("line " + std::to_string(lineno) + ", column " + response_column + ": non-numeric cell '" +
                            fields[static_cast<std::size_t>(resp)] + "'");
        }
        (rule.matches(fields[static_cast<std::size_t>(dom)]) ? out.source : out.target).rows.push_back(std::move(s));
    }
    if (out.source.empty() || out.target.empty()) throw DataError("empty partition");
    return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& source, const Dataset& target,
               const std::string& response_column, const std::string& domain_column) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write data file: " + path.string());
    const Eigen::Index d = std::max(source.features(), target.features());
    for (Eigen::Index i = 0; i < d; ++i) os << 'x' << (i + 1) << ',';
    os << response_column << ',' << domain_column << '\n';
    for (const Dataset* data : {&source, &target}) {
        const char* tag = data == &source ? "S" : "T";
        for (const auto& s : data->rows) {
            for (Eigen::Index i = 0; i < d; ++i) os << format_double(s.x(i)) << ',';
            os << format_double(s.y) << ',' << tag << '\n';
        }
    }
    if (!os) throw DataError("failed writing data file: " + path.string());
}

SynthData synth_generate(std::uint64_t seed, std::size_t d, std::size_t n_source, std::size_t n_target,
                         const SynthShift& shift) {
    if (d == 0 || n_source == 0 || n_target == 0) throw ConfigError("synthetic sizes must be positive");
    if (shift.cov_scale <= -1.0) throw ConfigError("cov_scale must exceed -1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto dim = static_cast<Eigen::Index>(d);

    SynthData out;
    out.beta_source.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) out.beta_source(i) = normal(rng);
    Vector dir(dim);
    for (Eigen::Index i = 0; i < dim; ++i) dir(i) = normal(rng);
    const double bnorm = out.beta_source.norm();
    // Rotate within the plane of beta_source and a random orthogonal direction.
    dir -= out.beta_source * (dir.dot(out.beta_source) / (bnorm * bnorm));
    out.beta_target = std::cos(shift.coef_rotation) * out.beta_source;
    if (d > 1 && dir.norm() > 0.0) out.beta_target += std::sin(shift.coef_rotation) * bnorm * dir.normalized();

    auto draw = [&](Dataset& data, std::size_t n, double mean, double sd, const Vector& beta) {
        data.rows.reserve(n);
        for (std::size_t r = 0; r < n; ++r) {
            Sample s;
            s.x.resize(dim);
            for (Eigen::Index i = 0; i < dim; ++i) s.x(i) = mean + sd * normal(rng);
            s.y = beta.dot(s.x) + shift.noise * normal(rng);
            data.rows.push_back(std::move(s));
        }
    };
    out.source.domain = DomainTag::Source;
    out.target.domain = DomainTag::Target;
    draw(out.source, n_source, 0.0, 1.0, out.beta_source);
    draw(out.target, n_target, shift.mean_shift, std::sqrt(1.0 + shift.cov_scale), out.beta_target);
    return out;
}

Standardizer Standardizer::fit(const Dataset& data) {
    if (data.empty()) throw DataError("empty dataset");
    const Eigen::Index d = data.features();
    Standardizer st;
    st.mean = Vector::Zero(d);
    for (const auto& s : data.rows) st.mean += s.x;
    st.mean /= static_cast<double>(data.size());
    Vector var = Vector::Zero(d);
    for (const auto& s : data.rows) var += (s.x - st.mean).cwiseAbs2();
    var /= static_cast<double>(data.size());
    st.scale = var.cwiseSqrt();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(st.scale(i) > 0.0)) st.scale(i) = 1.0;  // constant column: center only
    }
    return st;
}

Sample Standardizer::apply(const Sample& s) const {
    return {(s.x - mean).cwiseQuotient(scale), s.y};
}

Dataset Standardizer::apply(const Dataset& data) const {
    Dataset out;
    out.domain = data.domain;
    out.rows.reserve(data.size());
    for (const auto& s : data.rows) out.rows.push_back(apply(s));
    return out;
}

}  // namespace drda
