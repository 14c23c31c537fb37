#include "sentinel/csv.hpp"

#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sentinel {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        if (s == "inf") return std::numeric_limits<double>::infinity();
        throw std::runtime_error("bad number in CSV: '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad integer in CSV: '" + s + "'");
    return v;
}

std::string join_indices(const std::vector<int>& idx) { return idx.empty() ? std::string("none") : subset_label(idx); }

std::vector<int> parse_indices(const std::string& s) { return s == "none" ? std::vector<int>{} : parse_subset_label(s); }

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

std::vector<std::vector<std::string>> read_rows(std::istream& in, std::vector<std::string>& header) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("CSV is empty");
    header = split_csv_line(line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw std::runtime_error("CSV row has " + std::to_string(cells.size()) +
                                                                    " cells, header has " + std::to_string(header.size()));
        rows.push_back(std::move(cells));
    }
    return rows;
}

int count_prefix(const std::vector<std::string>& header, const std::string& prefix) {
    int count = 0;
    while (true) {
        const std::string name = prefix + std::to_string(count + 1);
        bool found = false;
        for (const auto& h : header) found = found || h == name;
        if (!found) return count;
        ++count;
    }
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::runtime_error("CSV is missing column '" + name + "'");
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    if (trace.x.empty()) throw std::invalid_argument("trace is empty");
    const auto n = trace.x.front().size();
    const auto p = trace.y.front().size();
    std::vector<std::string> header{"k"};
    for (Eigen::Index i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
    for (const char* name : {"y", "a", "m"})
        for (Eigen::Index i = 1; i <= p; ++i) header.push_back(name + std::to_string(i));
    write_row(out, header);
    for (std::size_t k = 0; k < trace.x.size(); ++k) {
        std::vector<std::string> row{std::to_string(k)};
        for (const auto* series : {&trace.x, &trace.y, &trace.a, &trace.m})
            for (Eigen::Index i = 0; i < (*series)[k].size(); ++i) row.push_back(fmt((*series)[k](i)));
        write_row(out, row);
    }
}

Trace read_trace_csv(std::istream& in) {
    std::vector<std::string> header;
    const auto rows = read_rows(in, header);
    const int n = count_prefix(header, "x");
    const int p = count_prefix(header, "y");
    if (static_cast<int>(header.size()) != 1 + n + 3 * p) throw std::runtime_error("trace CSV header is malformed");
    Trace trace;
    trace.horizon = static_cast<int>(rows.size()) - 1;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (parse_int(rows[k][0]) != static_cast<int>(k)) throw std::runtime_error("trace CSV steps are not consecutive");
        std::size_t c = 1;
        auto take = [&](int len) {
            Vector v(len);
            for (int i = 0; i < len; ++i) v(i) = parse_double(rows[k][c++]);
            return v;
        };
        trace.x.push_back(take(n));
        trace.y.push_back(take(p));
        trace.a.push_back(take(p));
        trace.m.push_back(take(p));
        trace.u.emplace_back();
    }
    return trace;
}

void write_bank_csv(std::ostream& out, const BankLog& log) {
    std::vector<std::string> header{"k", "sigma"};
    for (const auto& J : log.j_sets) header.push_back("pi_" + subset_label(J));
    const auto n = log.xhat.empty() ? 0 : log.xhat.front().size();
    for (Eigen::Index i = 1; i <= n; ++i) header.push_back("xhat" + std::to_string(i));
    header.emplace_back("e_norm");
    write_row(out, header);
    for (std::size_t r = 0; r < log.k.size(); ++r) {
        std::vector<std::string> row{std::to_string(log.k[r]), subset_label(log.j_sets[log.sigma[r]])};
        for (Eigen::Index j = 0; j < log.pi[r].size(); ++j) row.push_back(fmt(log.pi[r](j)));
        for (Eigen::Index i = 0; i < log.xhat[r].size(); ++i) row.push_back(fmt(log.xhat[r](i)));
        row.push_back(fmt(log.e_norm[r]));
        write_row(out, row);
    }
}

BankLog read_bank_csv(std::istream& in) {
    std::vector<std::string> header;
    const auto rows = read_rows(in, header);
    if (header.size() < 3 || header[0] != "k" || header[1] != "sigma" || header.back() != "e_norm")
        throw std::runtime_error("bank CSV header is malformed");
    BankLog log;
    std::size_t c = 2;
    while (c < header.size() && header[c].rfind("pi_", 0) == 0) log.j_sets.push_back(parse_subset_label(header[c++].substr(3)));
    const std::size_t nj = log.j_sets.size();
    const int n = count_prefix(header, "xhat");
    if (header.size() != 3 + nj + static_cast<std::size_t>(n)) throw std::runtime_error("bank CSV header is malformed");
    for (const auto& row : rows) {
        log.k.push_back(parse_int(row[0]));
        const auto sigma = parse_subset_label(row[1]);
        std::size_t s = 0;
        while (s < nj && log.j_sets[s] != sigma) ++s;
        if (s == nj) throw std::runtime_error("bank CSV sigma '" + row[1] + "' is not a listed subset");
        log.sigma.push_back(s);
        Vector pi(static_cast<Eigen::Index>(nj));
        for (std::size_t j = 0; j < nj; ++j) pi(static_cast<Eigen::Index>(j)) = parse_double(row[2 + j]);
        log.pi.push_back(pi);
        Vector xhat(n);
        for (int i = 0; i < n; ++i) xhat(i) = parse_double(row[2 + nj + static_cast<std::size_t>(i)]);
        log.xhat.push_back(xhat);
        log.e_norm.push_back(parse_double(row.back()));
    }
    return log;
}

void write_isolation_csv(std::ostream& out, const IsolationReport& report) {
    std::vector<std::string> header{"window_index", "winner_subset", "accused_sensors"};
    for (const auto& J : report.j_sets) header.push_back("n_" + subset_label(J));
    for (const char* name : {"first_step", "last_step", "separation", "trustworthy"}) header.emplace_back(name);
    write_row(out, header);
    for (const auto& w : report.windows) {
        std::vector<std::string> row{std::to_string(w.index), subset_label(report.j_sets[w.winner]), join_indices(w.accused)};
        for (const int c : w.counts) row.push_back(std::to_string(c));
        row.push_back(std::to_string(w.first_step));
        row.push_back(std::to_string(w.last_step));
        row.push_back(fmt(w.separation));
        row.push_back(w.trustworthy ? "1" : "0");
        write_row(out, row);
    }
}

IsolationReport read_isolation_csv(std::istream& in) {
    std::vector<std::string> header;
    const auto rows = read_rows(in, header);
    if (header.size() < 7 || header[0] != "window_index" || header[1] != "winner_subset" || header[2] != "accused_sensors")
        throw std::runtime_error("isolation CSV header is malformed");
    IsolationReport report;
    std::size_t c = 3;
    while (c < header.size() && header[c].rfind("n_", 0) == 0) report.j_sets.push_back(parse_subset_label(header[c++].substr(2)));
    const std::size_t nj = report.j_sets.size();
    if (nj == 0 || header.size() != 7 + nj) throw std::runtime_error("isolation CSV header is malformed");
    for (const auto& J : report.j_sets)
        for (const int i : J) report.p = std::max(report.p, i);
    report.q_star = report.p - static_cast<int>(report.j_sets.front().size());

    const std::size_t first = column(header, "first_step");
    for (const auto& row : rows) {
        IsolationWindow w;
        w.index = parse_int(row[0]);
        const auto winner = parse_subset_label(row[1]);
        while (w.winner < nj && report.j_sets[w.winner] != winner) ++w.winner;
        if (w.winner == nj) throw std::runtime_error("isolation CSV winner '" + row[1] + "' is not a listed subset");
        w.accused = parse_indices(row[2]);
        int total = 0;
        for (std::size_t j = 0; j < nj; ++j) {
            w.counts.push_back(parse_int(row[3 + j]));
            total += w.counts.back();
        }
        w.first_step = parse_int(row[first]);
        w.last_step = parse_int(row[first + 1]);
        w.separation = parse_double(row[first + 2]);
        w.trustworthy = row[first + 3] == "1";
        report.window_size = total;
        report.windows.push_back(std::move(w));
    }
    return report;
}

nlohmann::json column_dictionary() {
    using nlohmann::json;
    return json{
        {"trace.csv",
         {{"k", "time step, 0..K"},
          {"x<i>", "true plant state component i"},
          {"y<i>", "measured output of sensor i, C x + a + m"},
          {"a<i>", "attack signal on sensor i (zero outside the attacked set)"},
          {"m<i>", "measurement noise on sensor i"}}},
        {"error.csv",
         {{"k", "time step"},
          {"e<i>", "estimation error component i, xhat - x"},
          {"e_norm", "Euclidean norm of the estimation error"},
          {"bound", "certificate bound c lambda^k |e(0)| + gamma max_{j<k} |m(j)|"}}},
        {"bank.csv",
         {{"k", "time step"},
          {"sigma", "selected subset, sensor indices joined by '-'"},
          {"pi_<J>", "largest deviation between the subset-J estimate and the estimates of its sub-subsets"},
          {"xhat<i>", "fused estimate component i, taken from the selected subset"},
          {"e_norm", "Euclidean norm of the fused estimation error"}}},
        {"isolation.csv",
         {{"window_index", "1-based window number"},
          {"winner_subset", "subset with the most argmin votes in the window"},
          {"accused_sensors", "sensors outside the winner, joined by '-' ('none' when empty)"},
          {"n_<J>", "argmin votes for subset J in the window"},
          {"first_step", "first step k of the window"},
          {"last_step", "last step k of the window"},
          {"separation", "smallest losing mean pi over the winner's mean pi"},
          {"trustworthy", "1 when separation reaches the trust ratio"}}},
    };
}

}  // namespace sentinel
