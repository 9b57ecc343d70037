#include "hsmm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace hsmm {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
            cell.pop_back();
        size_t b = cell.find_first_not_of(' ');
        out.push_back(b == std::string::npos ? "" : cell.substr(b));
    }
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

double parse_cell(const std::string& cell, long long row, const std::string& col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw DataError("row " + std::to_string(row) + ", column '" + col +
                        "': cannot parse '" + cell + "' as a number");
    return v;
}

size_t find_col(const std::vector<std::string>& header, const std::string& name,
                const std::string& path) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw DataError("column '" + name + "' not found in " + path);
    return static_cast<size_t>(it - header.begin());
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

TimeSeriesData load_series_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + " is empty");
    std::vector<std::string> header = split_line(line, schema.delimiter);

    size_t yc = find_col(header, schema.y_col, path);
    std::vector<size_t> xc;
    for (const std::string& name : schema.x_cols) xc.push_back(find_col(header, name, path));
    size_t sc = schema.session_col.empty() ? SIZE_MAX
                                           : find_col(header, schema.session_col, path);
    size_t tc = schema.time_col.empty() ? SIZE_MAX : find_col(header, schema.time_col, path);

    TimeSeriesData data;
    std::map<std::string, int> session_ids;
    std::vector<bool> session_closed;
    int cur_session = -1;
    double prev_time = 0.0;
    long long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells = split_line(line, schema.delimiter);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));
        data.y.push_back(parse_cell(cells[yc], row, schema.y_col));
        Vec xrow(xc.size());
        for (size_t c = 0; c < xc.size(); ++c)
            xrow[c] = parse_cell(cells[xc[c]], row, schema.x_cols[c]);
        data.X.push_back(std::move(xrow));

        int sid = 0;
        if (sc != SIZE_MAX) {
            const std::string& label = cells[sc];
            auto it = session_ids.find(label);
            if (it == session_ids.end()) {
                sid = static_cast<int>(session_ids.size());
                session_ids.emplace(label, sid);
                session_closed.push_back(false);
            } else {
                sid = it->second;
                if (sid != cur_session && session_closed[sid])
                    throw DataError("session '" + label +
                                    "' appears in two separate blocks (row " +
                                    std::to_string(row) + ")");
            }
        }
        if (sid != cur_session) {
            if (cur_session >= 0) session_closed[cur_session] = true;
            cur_session = sid;
        }
        data.session.push_back(sid);

        if (tc != SIZE_MAX) {
            double tval = parse_cell(cells[tc], row, schema.time_col);
            bool new_session = data.session.size() < 2 ||
                               data.session[data.session.size() - 2] != sid;
            if (!new_session) {
                double step = tval - prev_time;
                if (step <= 0.0)
                    throw DataError("rows not sorted by time within session (row " +
                                    std::to_string(row) + ")");
                if (step != 1.0 && !schema.allow_gaps)
                    throw DataError("time gap within session at row " + std::to_string(row) +
                                    " (step of " + fmt_double(step) + ")");
            }
            prev_time = tval;
        }
    }
    if (data.y.empty()) throw DataError(path + " has a header but no data rows");
    data.x0 = data.X[0];
    data.validate();
    return data;
}

void write_series_csv(const std::string& path, const TimeSeriesData& data,
                      const CsvSchema& schema) {
    data.validate();
    if (static_cast<int>(schema.x_cols.size()) != data.r())
        throw DataError("schema covariate names do not match data width");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    char d = schema.delimiter;
    out << schema.y_col;
    for (const std::string& name : schema.x_cols) out << d << name;
    out << d << (schema.session_col.empty() ? "session" : schema.session_col) << "\n";
    for (long long t = 0; t < data.n(); ++t) {
        out << fmt_double(data.y[t]);
        for (int c = 0; c < data.r(); ++c) out << d << fmt_double(data.X[t][c]);
        out << d << data.session[t] << "\n";
    }
    if (!out) throw DataError("write failed for " + path);
}

DesignSpec engineer_covariates(TimeSeriesData& data, const EngineerOptions& opts) {
    data.validate();
    if (opts.window < 1) throw ConfigError("window must be at least 1", "design.window");
    int r = data.r();
    if (!opts.windowed.empty() && static_cast<int>(opts.windowed.size()) != r)
        throw ConfigError("windowed flags must match covariate count", "design.windowed");
    if (!opts.x0_override.empty()) {
        if (static_cast<int>(opts.x0_override.size()) != r)
            throw ConfigError("x0 must match covariate count", "data.x0");
        data.x0 = opts.x0_override;
        data.validate();
    }
    long long shortest = data.n();
    for (auto [a, b] : data.session_ranges()) shortest = std::min(shortest, b - a);
    if (opts.window > shortest)
        throw ConfigError("window exceeds the shortest session (" +
                              std::to_string(shortest) + " rows)",
                          "design.window");

    DesignSpec spec;
    spec.n_cov = r;
    spec.window = opts.window;
    spec.session_terms = opts.session_terms;
    if (!opts.windowed.empty()) {
        spec.windowed = opts.windowed;
    } else {
        spec.windowed.assign(r, 0);
        if (r > 0) spec.windowed[0] = 1;
    }
    if (opts.standardize && r > 0) {
        spec.center.assign(r, 0.0);
        spec.scale.assign(r, 1.0);
        long long n = data.n();
        for (int c = 0; c < r; ++c) {
            double mean = 0.0;
            for (long long t = 0; t < n; ++t) mean += data.X[t][c];
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (long long t = 0; t < n; ++t) {
                double dd = data.X[t][c] - mean;
                ss += dd * dd;
            }
            double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
            spec.center[c] = mean;
            spec.scale[c] = sd > 1e-12 ? sd : 1.0;
        }
    }
    spec.validate();
    return spec;
}

}  // namespace hsmm
