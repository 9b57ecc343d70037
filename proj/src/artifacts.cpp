#include "hsmm/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hsmm {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& cell, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw DataError(where + ": cannot parse '" + cell + "' as a number");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::vector<std::string> draws_header(int M, int S, int cols) {
    std::vector<std::string> h = {"iter", "loglik", "n_segments"};
    auto idx = [](const std::string& base, int i) {
        return base + "[" + std::to_string(i) + "]";
    };
    auto idx2 = [](const std::string& base, int i, int j) {
        return base + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
    };
    for (int j = 0; j < M; ++j) h.push_back(idx("mu", j));
    for (int j = 0; j < M; ++j) h.push_back(idx("sigma2", j));
    for (int j = 0; j < M; ++j)
        for (int c = 0; c < cols; ++c) h.push_back(idx2("beta", j, c));
    for (int s = 0; s < S; ++s)
        for (int j = 0; j < M; ++j) h.push_back(idx2("rho", s, j));
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k)
            if (j != k) h.push_back(idx2("P", j, k));
    for (int j = 0; j < M; ++j) h.push_back(idx("kappa", j));
    for (int j = 0; j < M; ++j) h.push_back(idx("accept", j));
    for (int j = 0; j < M; ++j) h.push_back(idx("phi_mean", j));
    for (int j = 0; j < M; ++j) h.push_back(idx("phi_min", j));
    for (int j = 0; j < M; ++j) h.push_back(idx("phi_max", j));
    return h;
}

}  // namespace

void write_draws_csv(const std::string& path, const PosteriorDraws& draws) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    std::vector<std::string> header =
        draws_header(draws.M, draws.n_sessions, draws.design_cols);
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const DrawRecord& rec : draws.records) {
        out << rec.iter << "," << fmt(rec.loglik) << "," << rec.n_segments;
        auto put = [&](double v) { out << "," << fmt(v); };
        for (double v : rec.mu) put(v);
        for (double v : rec.sigma2) put(v);
        for (const Vec& row : rec.B)
            for (double v : row) put(v);
        for (const Vec& row : rec.rho)
            for (double v : row) put(v);
        for (int j = 0; j < draws.M; ++j)
            for (int k = 0; k < draws.M; ++k)
                if (j != k) put(rec.P[j][k]);
        for (double v : rec.kappa) put(v);
        for (double v : rec.accept_rate) put(v);
        for (double v : rec.phi_mean) put(v);
        for (double v : rec.phi_min) put(v);
        for (double v : rec.phi_max) put(v);
        out << "\n";
    }
    if (!out) throw DataError("write failed for " + path);
}

PosteriorDraws read_draws_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + " is empty");
    std::vector<std::string> header = split_csv(line);

    int M = 0, S = 0, cols = 0;
    for (const std::string& h : header) {
        if (h.rfind("mu[", 0) == 0) ++M;
        if (h.rfind("beta[0][", 0) == 0) ++cols;
        if (h.rfind("rho[", 0) == 0 && h.substr(h.size() - 3) == "[0]") ++S;
    }
    if (M < 1 || cols < 1 || S < 1 ||
        header != draws_header(M, S, cols))
        throw DataError(path + " does not look like a draws file");

    PosteriorDraws out;
    out.M = M;
    out.n_sessions = S;
    out.design_cols = cols;
    long long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv(line);
        if (cells.size() != header.size())
            throw DataError(path + " row " + std::to_string(row) + " has wrong width");
        std::string where = path + " row " + std::to_string(row);
        size_t at = 0;
        DrawRecord rec;
        rec.iter = static_cast<long long>(parse_double(cells[at++], where));
        rec.loglik = parse_double(cells[at++], where);
        rec.n_segments = static_cast<long long>(parse_double(cells[at++], where));
        auto take = [&]() { return parse_double(cells[at++], where); };
        rec.mu.resize(M);
        for (int j = 0; j < M; ++j) rec.mu[j] = take();
        rec.sigma2.resize(M);
        for (int j = 0; j < M; ++j) rec.sigma2[j] = take();
        rec.B.assign(M, Vec(cols));
        for (int j = 0; j < M; ++j)
            for (int c = 0; c < cols; ++c) rec.B[j][c] = take();
        rec.rho.assign(S, Vec(M));
        for (int s = 0; s < S; ++s)
            for (int j = 0; j < M; ++j) rec.rho[s][j] = take();
        rec.P.assign(M, Vec(M, 0.0));
        for (int j = 0; j < M; ++j)
            for (int k = 0; k < M; ++k)
                if (j != k) rec.P[j][k] = take();
        rec.kappa.resize(M);
        for (int j = 0; j < M; ++j) rec.kappa[j] = take();
        rec.accept_rate.resize(M);
        for (int j = 0; j < M; ++j) rec.accept_rate[j] = take();
        rec.phi_mean.resize(M);
        for (int j = 0; j < M; ++j) rec.phi_mean[j] = take();
        rec.phi_min.resize(M);
        for (int j = 0; j < M; ++j) rec.phi_min[j] = take();
        rec.phi_max.resize(M);
        for (int j = 0; j < M; ++j) rec.phi_max[j] = take();
        out.records.push_back(std::move(rec));
    }
    if (out.records.empty()) throw DataError(path + " holds no draws");
    return out;
}

void write_states_csv(const std::string& path, const Segmentation& seg) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "t,state\n";
    std::vector<int> s = seg.expand();
    for (size_t t = 0; t < s.size(); ++t) out << t << "," << s[t] << "\n";
    if (!out) throw DataError("write failed for " + path);
}

std::vector<int> read_states_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + " is empty");
    std::vector<std::string> header = split_csv(line);
    if (header.size() != 2 || header[0] != "t" || header[1] != "state")
        throw DataError(path + " must have header t,state");
    std::vector<int> states;
    long long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv(line);
        std::string where = path + " row " + std::to_string(row);
        if (cells.size() != 2) throw DataError(where + ": expected two cells");
        long long t = static_cast<long long>(parse_double(cells[0], where));
        if (t != row - 1) throw DataError(where + ": time index out of order");
        states.push_back(static_cast<int>(parse_double(cells[1], where)));
    }
    if (states.empty()) throw DataError(path + " holds no states");
    return states;
}

void write_segments_csv(const std::string& path, const Segmentation& seg) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "segment,state,duration,boundary\n";
    for (long long q = 0; q < seg.n_segments(); ++q)
        out << q << "," << seg.states[q] << "," << seg.durations[q] << ","
            << seg.boundaries[q] << "\n";
    if (!out) throw DataError("write failed for " + path);
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "name,mean,sd,median,lo,hi\n";
    for (const SummaryRow& r : rows)
        out << r.name << "," << fmt(r.mean) << "," << fmt(r.sd) << "," << fmt(r.median)
            << "," << fmt(r.lo) << "," << fmt(r.hi) << "\n";
    if (!out) throw DataError("write failed for " + path);
}

json summary_to_json(const std::vector<SummaryRow>& rows) {
    json arr = json::array();
    for (const SummaryRow& r : rows)
        arr.push_back({{"name", r.name},
                       {"mean", r.mean},
                       {"sd", r.sd},
                       {"median", r.median},
                       {"lo", r.lo},
                       {"hi", r.hi}});
    return arr;
}

void write_coverage_csv(const std::string& path, const std::vector<CoverageRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "rate,coverage_mu,coverage_sigma2,mc_stderr\n";
    for (const CoverageRow& r : rows)
        out << fmt(r.rate) << "," << fmt(r.coverage_mu) << "," << fmt(r.coverage_sigma2)
            << "," << fmt(r.mc_stderr) << "\n";
    if (!out) throw DataError("write failed for " + path);
}

json coverage_to_json(const std::vector<CoverageRow>& rows) {
    json arr = json::array();
    for (const CoverageRow& r : rows)
        arr.push_back({{"rate", r.rate},
                       {"coverage_mu", r.coverage_mu},
                       {"coverage_sigma2", r.coverage_sigma2},
                       {"mc_stderr", r.mc_stderr}});
    return arr;
}

json params_to_json(const ModelParams& params) {
    return json{{"mu", params.mu},
                {"sigma2", params.sigma2},
                {"rho", params.rho},
                {"P", params.P},
                {"B", params.B}};
}

ModelParams params_from_json(const json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError("expected an object", path);
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (it.key() != "mu" && it.key() != "sigma2" && it.key() != "rho" &&
            it.key() != "P" && it.key() != "B")
            throw ConfigError("unknown config key", path + "." + it.key());
    ModelParams out;
    auto vec = [&](const char* key) -> Vec {
        auto it = obj.find(key);
        if (it == obj.end())
            throw ConfigError("missing required field", path + "." + key);
        if (!it->is_array()) throw ConfigError("expected an array", path + "." + key);
        return it->get<Vec>();
    };
    auto mat = [&](const char* key) -> Mat {
        auto it = obj.find(key);
        if (it == obj.end())
            throw ConfigError("missing required field", path + "." + key);
        if (!it->is_array()) throw ConfigError("expected an array", path + "." + key);
        return it->get<Mat>();
    };
    out.mu = vec("mu");
    out.sigma2 = vec("sigma2");
    out.rho = mat("rho");
    out.P = mat("P");
    out.B = mat("B");
    out.M = static_cast<int>(out.mu.size());
    return out;
}

json design_to_json(const DesignSpec& spec) {
    json wf = json::array();
    for (auto f : spec.windowed) wf.push_back(static_cast<bool>(f));
    return json{{"n_cov", spec.n_cov},     {"window", spec.window},
                {"windowed", wf},          {"session_terms", spec.session_terms},
                {"center", spec.center},   {"scale", spec.scale}};
}

json segmentation_to_json(const Segmentation& seg) {
    return json{{"states", seg.states},
                {"durations", seg.durations},
                {"boundaries", seg.boundaries}};
}

void write_json_file(const std::string& path, const json& obj) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << obj.dump(2) << "\n";
    if (!out) throw DataError("write failed for " + path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    json obj;
    try {
        in >> obj;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return obj;
}

ModelParams posterior_mean_params(const std::vector<PosteriorDraws>& chains) {
    if (chains.empty()) throw DataError("no chains given");
    int M = chains[0].M, S = chains[0].n_sessions, cols = chains[0].design_cols;
    for (const PosteriorDraws& c : chains)
        if (c.M != M || c.n_sessions != S || c.design_cols != cols)
            throw DataError("chains disagree on model dimensions");
    ModelParams p;
    p.M = M;
    p.mu.assign(M, 0.0);
    p.sigma2.assign(M, 0.0);
    p.rho.assign(S, Vec(M, 0.0));
    p.P.assign(M, Vec(M, 0.0));
    p.B.assign(M, Vec(cols, 0.0));
    long long total = 0;
    for (const PosteriorDraws& c : chains) {
        total += static_cast<long long>(c.records.size());
        for (const DrawRecord& rec : c.records) {
            for (int j = 0; j < M; ++j) {
                p.mu[j] += rec.mu[j];
                p.sigma2[j] += rec.sigma2[j];
                for (int cc = 0; cc < cols; ++cc) p.B[j][cc] += rec.B[j][cc];
                for (int k = 0; k < M; ++k) p.P[j][k] += rec.P[j][k];
            }
            for (int s = 0; s < S; ++s)
                for (int j = 0; j < M; ++j) p.rho[s][j] += rec.rho[s][j];
        }
    }
    if (total == 0) throw DataError("chains hold no draws");
    auto scale = [&](Vec& v) {
        for (double& x : v) x /= static_cast<double>(total);
    };
    scale(p.mu);
    scale(p.sigma2);
    for (Vec& row : p.B) scale(row);
    for (Vec& row : p.rho) {
        scale(row);
        double s = 0.0;
        for (double v : row) s += v;
        if (s > 0.0)
            for (double& v : row) v /= s;
    }
    for (int j = 0; j < M; ++j) {
        scale(p.P[j]);
        p.P[j][j] = 0.0;
        double s = 0.0;
        for (double v : p.P[j]) s += v;
        if (s > 0.0)
            for (double& v : p.P[j]) v /= s;
    }
    return p;
}

}  // namespace hsmm
