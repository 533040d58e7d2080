#include "drda/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace drda {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write output file: " + path.string());
    return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw DataError("failed writing output file: " + path.string());
}

}  // namespace

std::string format_table(const ResultsTable& table) {
    std::ostringstream os;
    os << "dataset,checkpoint";
    for (const auto& m : table.methods) os << ',' << m;
    os << '\n';
    for (std::size_t r = 0; r < table.checkpoints.size(); ++r) {
        os << table.dataset << ',' << table.checkpoints[r];
        for (double v : table.normalized[r]) os << ',' << format_double(v);
        os << '\n';
    }
    return os.str();
}

OutputFiles emit_outputs(const ExperimentOutput& out, const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir) {
    if (out.runs.empty()) throw DataError("no results to write");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + out_dir.string());

    const std::string tag = "_seed" + std::to_string(cfg.seed);
    OutputFiles files{out_dir / ("table" + tag + ".csv"), out_dir / ("curves" + tag + ".csv"),
                      out_dir / ("runs" + tag + ".csv"), out_dir / ("manifest" + tag + ".txt")};

    {
        auto os = open_out(files.table);
        os << format_table(out.table);
        finish(os, files.table);
    }

    {
        auto os = open_out(files.curves);
        os << "step,method,mean,std\n";
        for (const auto& m : out.table.methods) {
            std::vector<const RunResult*> rs;
            for (const auto& r : out.runs) {
                if (r.method == m) rs.push_back(&r);
            }
            const std::size_t steps = rs.empty() ? 0 : rs.front()->cumulative.size();
            const double n = static_cast<double>(rs.size());
            for (std::size_t s = 0; s < steps; ++s) {
                double mean = 0.0;
                for (const auto* r : rs) mean += r->cumulative[s];
                mean /= n;
                double var = 0.0;
                for (const auto* r : rs) var += (r->cumulative[s] - mean) * (r->cumulative[s] - mean);
                const double sd = rs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
                os << (s + 1) << ',' << m << ',' << format_double(mean) << ',' << format_double(sd) << '\n';
            }
        }
        finish(os, files.curves);
    }

    {
        auto os = open_out(files.runs);
        os << "replication,seed,method,converged,step,cumulative_loss\n";
        for (const auto& r : out.runs) {
            for (std::size_t s = 0; s < r.cumulative.size(); ++s) {
                os << r.replication << ',' << r.seed << ',' << r.method << ',' << (r.converged ? 1 : 0) << ','
                   << (s + 1) << ',' << format_double(r.cumulative[s]) << '\n';
            }
        }
        finish(os, files.runs);
    }

    {
        ExperimentConfig resolved = cfg;
        resolved.standardize = out.standardized;
        auto os = open_out(files.manifest);
        os << "# run manifest; loads as a config file\n"
           << "# max_target_jitter = " << format_double(out.max_target_jitter) << '\n'
           << "# all_converged = " << (out.all_converged ? "true" : "false") << '\n'
           << "# dropped_experts = " << out.dropped_experts << '\n';
        for (const auto& r : out.runs) {
            for (const auto& d : r.dropped) os << "# dropped: replication " << r.replication << ", " << d << '\n';
        }
        os << format_config(resolved);
        finish(os, files.manifest);
    }
    return files;
}

std::vector<RunResult> read_runs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open runs file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "replication,seed,method,converged,step,cumulative_loss") {
        throw DataError("not a runs file: " + path.string());
    }
    std::vector<RunResult> runs;
    std::map<std::pair<std::size_t, std::string>, std::size_t> index;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (f.size() != 6) throw DataError("runs file line " + std::to_string(lineno) + ": expected 6 fields");
        auto num = [&](const std::string& s, auto& v) {
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw DataError("runs file line " + std::to_string(lineno) + ": bad number '" + s + "'");
            }
        };
        std::size_t rep = 0;
        std::uint64_t seed = 0;
        int conv = 0;
        std::size_t step = 0;
        double loss = 0.0;
        num(f[0], rep);
        num(f[1], seed);
        num(f[3], conv);
        num(f[4], step);
        num(f[5], loss);
        const auto key = std::make_pair(rep, f[2]);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, runs.size()).first;
            RunResult r;
            r.method = f[2];
            r.replication = rep;
            r.seed = seed;
            runs.push_back(std::move(r));
        }
        RunResult& r = runs[it->second];
        if (step != r.cumulative.size() + 1) {
            throw DataError("runs file line " + std::to_string(lineno) + ": steps out of order");
        }
        r.converged = r.converged && conv != 0;
        r.cumulative.push_back(loss);
    }
    return runs;
}

}  // namespace drda
