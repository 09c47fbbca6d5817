#include "vwrrl/training_log.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "vwrrl/errors.hpp"

namespace vwrrl {

std::string format_sig6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void write_update_csv(std::ostream& out, const std::vector<UpdateRecord>& updates) {
    out << "timestep,episode,episode_return,mean_return_100,r_vwr_mean,sigma_delta_mean,"
           "policy_loss,value_loss_short,value_loss_long,entropy,hotwire_active\n";
    for (const auto& u : updates) {
        out << u.timestep << ',' << u.episode << ',' << format_sig6(u.episode_return) << ','
            << format_sig6(u.mean_return_100) << ',' << format_sig6(u.r_vwr_mean) << ','
            << format_sig6(u.sigma_delta_mean) << ',' << format_sig6(u.stats.policy_loss) << ','
            << format_sig6(u.stats.value_loss_short) << ',' << format_sig6(u.stats.value_loss_long) << ','
            << format_sig6(u.stats.entropy) << ',' << (u.hotwire_active ? 1 : 0) << '\n';
    }
}

void write_episode_csv(std::ostream& out, const std::vector<EpisodeRecord>& episodes) {
    out << "episode,end_timestep,length,episode_return\n";
    for (const auto& e : episodes) {
        out << e.episode << ',' << e.end_timestep << ',' << e.length << ',' << format_exact(e.episode_return) << '\n';
    }
}

void write_step_csv(std::ostream& out, const std::vector<StepRecord>& steps) {
    out << "timestep,episode,reward,r_vwr,sigma_delta,terminal,hotwired\n";
    for (const auto& s : steps) {
        out << s.timestep << ',' << s.episode << ',' << format_exact(s.reward) << ',' << format_exact(s.r_vwr) << ','
            << format_exact(s.sigma_delta) << ',' << (s.terminal ? 1 : 0) << ',' << (s.hotwired ? 1 : 0) << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double to_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError("csv: not a number: '" + s + "'");
}

long long to_int(const std::string& s) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError("csv: not an integer: '" + s + "'");
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw InputError("csv: missing column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw InputError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size()) throw InputError("csv: row width does not match header");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return read_csv(in);
}

std::vector<EpisodeRecord> read_episode_csv(std::istream& in) {
    const CsvTable t = read_csv(in);
    const auto ep = t.column("episode"), end = t.column("end_timestep"), len = t.column("length"),
               ret = t.column("episode_return");
    std::vector<EpisodeRecord> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        out.push_back({to_int(r[ep]), to_int(r[end]), static_cast<int>(to_int(r[len])), to_double(r[ret])});
    }
    return out;
}

std::vector<StepRecord> read_step_csv(std::istream& in) {
    const CsvTable t = read_csv(in);
    const auto ts = t.column("timestep"), ep = t.column("episode"), rw = t.column("reward"), rv = t.column("r_vwr"),
               sd = t.column("sigma_delta"), term = t.column("terminal"), hot = t.column("hotwired");
    std::vector<StepRecord> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        out.push_back({to_int(r[ts]), to_int(r[ep]), to_double(r[rw]), to_double(r[rv]), to_double(r[sd]),
                       to_int(r[term]) != 0, to_int(r[hot]) != 0});
    }
    return out;
}

std::size_t audit_vwr_stream(const std::vector<StepRecord>& steps, const TrainConfig& cfg, double tolerance) {
    const VwrConfig vcfg = cfg.resolved_vwr();
    RewardHistory history(vcfg.window_T);
    std::size_t mismatches = 0;
    for (const auto& s : steps) {
        history.push(s.reward);
        const double expected = vwr(history, vcfg).r_vwr;
        if (std::abs(expected - s.r_vwr) > tolerance * std::max(1.0, std::abs(expected))) ++mismatches;
        if (s.terminal && cfg.history_reset == HistoryReset::per_episode) history.clear();
    }
    return mismatches;
}

}  // namespace vwrrl
