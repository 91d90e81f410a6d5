#include "bimatch/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;

namespace bimatch {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

int to_index(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size() || v < 1) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("invalid 1-based index for " + what + ": '" + s + "'");
    }
}

double to_real(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("invalid numeric value for " + what + ": '" + s + "'");
    }
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LongRow {
    int t = 0, i = 0, j = 0;
    std::string name;
    double value = 0.0;
};

}  // namespace

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file (header required)");
    const auto head = split_line(line);
    if (head != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw IoError(path + ": header must be exactly '" + want + "'");
    }
    std::vector<std::vector<std::string>> rows;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(header.size()) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

LoadedData load_directory(const std::string& dir) {
    const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
    const auto exists = [&](const char* name) { return fs::exists(path(name)); };

    if (!exists("outcomes.csv")) throw IoError("missing required file outcomes.csv");

    // First pass: collect rows and dimensions.
    std::vector<LongRow> y_rows, a_rows, g_rows, e_rows;
    std::vector<LongRow> x_rows, w_rows, p_rows;
    int T = 0, N = 0, M = 0;
    const auto bump = [](int& dim, int v) { dim = std::max(dim, v); };

    for (const auto& f : read_csv(path("outcomes.csv"), {"t", "j", "y"})) {
        LongRow r;
        r.t = to_index(f[0], "t");
        r.j = to_index(f[1], "j");
        r.value = to_real(f[2], "y");
        bump(T, r.t);
        bump(M, r.j);
        y_rows.push_back(r);
    }

    LoadedData data;
    if (exists("treatments.csv")) {
        data.has_treatments = true;
        for (const auto& f : read_csv(path("treatments.csv"), {"t", "i", "a"})) {
            LongRow r;
            r.t = to_index(f[0], "t");
            r.i = to_index(f[1], "i");
            r.value = to_real(f[2], "a");
            bump(T, r.t);
            bump(N, r.i);
            a_rows.push_back(r);
        }
    }
    if (exists("network.csv")) {
        data.has_network = true;
        for (const auto& f : read_csv(path("network.csv"), {"t", "i", "j", "g"})) {
            LongRow r;
            r.t = to_index(f[0], "t");
            r.i = to_index(f[1], "i");
            r.j = to_index(f[2], "j");
            r.value = to_real(f[3], "g");
            bump(T, r.t);
            bump(N, r.i);
            bump(M, r.j);
            g_rows.push_back(r);
        }
    }
    std::vector<std::string> x_names, w_names, p_names;
    const auto name_id = [](std::vector<std::string>& names, const std::string& n) {
        auto it = std::find(names.begin(), names.end(), n);
        if (it != names.end()) return int(it - names.begin());
        names.push_back(n);
        return int(names.size()) - 1;
    };
    if (exists("x_covariates.csv")) {
        for (const auto& f :
             read_csv(path("x_covariates.csv"), {"t", "i", "name", "value"})) {
            LongRow r;
            r.t = to_index(f[0], "t");
            r.i = to_index(f[1], "i");
            r.name = f[2];
            r.value = to_real(f[3], "value");
            name_id(x_names, r.name);
            bump(T, r.t);
            bump(N, r.i);
            x_rows.push_back(r);
        }
    }
    if (exists("w_covariates.csv")) {
        for (const auto& f :
             read_csv(path("w_covariates.csv"), {"t", "j", "name", "value"})) {
            LongRow r;
            r.t = to_index(f[0], "t");
            r.j = to_index(f[1], "j");
            r.name = f[2];
            r.value = to_real(f[3], "value");
            name_id(w_names, r.name);
            bump(T, r.t);
            bump(M, r.j);
            w_rows.push_back(r);
        }
    }
    if (exists("p_covariates.csv")) {
        for (const auto& f :
             read_csv(path("p_covariates.csv"), {"t", "i", "j", "name", "value"})) {
            LongRow r;
            r.t = to_index(f[0], "t");
            r.i = to_index(f[1], "i");
            r.j = to_index(f[2], "j");
            r.name = f[3];
            r.value = to_real(f[4], "value");
            name_id(p_names, r.name);
            bump(T, r.t);
            bump(N, r.i);
            bump(M, r.j);
            p_rows.push_back(r);
        }
    }
    if (exists("exposures.csv")) {
        data.has_exposures = true;
        for (const auto& f : read_csv(path("exposures.csv"), {"t", "j", "e"})) {
            LongRow r;
            r.t = to_index(f[0], "t");
            r.j = to_index(f[1], "j");
            r.value = to_real(f[2], "e");
            if (r.value != 0.0 && r.value != 1.0) {
                throw IoError("exposures.csv: e must be 0 or 1");
            }
            bump(T, r.t);
            bump(M, r.j);
            e_rows.push_back(r);
        }
    }
    if (exists("q_weights.csv")) {
        for (const auto& f : read_csv(path("q_weights.csv"), {"covariate", "i", "q"})) {
            const int i = to_index(f[1], "i");
            bump(N, i);
            auto& q = data.q_weights[f[0]];
            if (int(q.size()) < i) q.resize(i, 0.0);
            q[i - 1] = to_real(f[2], "q");
        }
    }

    if (N == 0) N = 1;  // outcome-only panels still need a nominal dimension
    PanelDataset& p = data.panel;
    p.T = T;
    p.N = N;
    p.M = M;
    p.pX = int(x_names.size());
    p.pW = int(w_names.size());
    p.pP = int(p_names.size());
    p.x_names = x_names;
    p.w_names = w_names;
    p.p_names = p_names;
    p.A.assign(size_t(T) * N, data.has_treatments ? kNaN : 0.0);
    p.G.assign(size_t(T) * N * M, 0.0);  // omitted network rows mean g = 0
    p.Y.assign(size_t(T) * M, kNaN);
    p.X.assign(size_t(T) * N * p.pX, kNaN);
    p.W.assign(size_t(T) * M * p.pW, kNaN);
    p.P.assign(size_t(T) * N * M * p.pP, 0.0);

    for (const auto& r : y_rows) p.Y[size_t(r.t - 1) * M + (r.j - 1)] = r.value;
    for (const auto& r : a_rows) p.A[size_t(r.t - 1) * N + (r.i - 1)] = r.value;
    for (const auto& r : g_rows) {
        p.G[(size_t(r.t - 1) * N + (r.i - 1)) * M + (r.j - 1)] = r.value;
    }
    for (const auto& r : x_rows) {
        const int s = int(std::find(x_names.begin(), x_names.end(), r.name) -
                          x_names.begin());
        p.X[(size_t(r.t - 1) * N + (r.i - 1)) * p.pX + s] = r.value;
    }
    for (const auto& r : w_rows) {
        const int s = int(std::find(w_names.begin(), w_names.end(), r.name) -
                          w_names.begin());
        p.W[(size_t(r.t - 1) * M + (r.j - 1)) * p.pW + s] = r.value;
    }
    for (const auto& r : p_rows) {
        const int s = int(std::find(p_names.begin(), p_names.end(), r.name) -
                          p_names.begin());
        p.P[((size_t(r.t - 1) * N + (r.i - 1)) * M + (r.j - 1)) * p.pP + s] = r.value;
    }
    if (data.has_exposures) {
        data.exposures.assign(size_t(T) * M, 0);
        for (const auto& r : e_rows) {
            data.exposures[size_t(r.t - 1) * M + (r.j - 1)] =
                r.value != 0.0 ? 1 : 0;
        }
    }
    for (auto& [name, q] : data.q_weights) q.resize(N, 0.0);
    return data;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    return out;
}

}  // namespace

void write_treatments_csv(const std::string& path, const PanelDataset& p) {
    auto out = open_out(path);
    out << "t,i,a\n";
    for (int t = 0; t < p.T; ++t) {
        for (int i = 0; i < p.N; ++i) {
            out << t + 1 << ',' << i + 1 << ',' << p.a(t, i) << '\n';
        }
    }
}

void write_network_csv(const std::string& path, const PanelDataset& p) {
    auto out = open_out(path);
    out << "t,i,j,g\n";
    for (int t = 0; t < p.T; ++t) {
        for (int i = 0; i < p.N; ++i) {
            for (int j = 0; j < p.M; ++j) {
                if (p.g(t, i, j) != 0.0) {
                    out << t + 1 << ',' << i + 1 << ',' << j + 1 << ",1\n";
                }
            }
        }
    }
}

void write_outcomes_csv(const std::string& path, const PanelDataset& p) {
    auto out = open_out(path);
    out << "t,j,y\n";
    for (int t = 0; t < p.T; ++t) {
        for (int j = 0; j < p.M; ++j) {
            out << t + 1 << ',' << j + 1 << ',' << p.y(t, j) << '\n';
        }
    }
}

void write_x_covariates_csv(const std::string& path, const PanelDataset& p) {
    auto out = open_out(path);
    out << "t,i,name,value\n";
    for (int t = 0; t < p.T; ++t) {
        for (int i = 0; i < p.N; ++i) {
            for (int s = 0; s < p.pX; ++s) {
                out << t + 1 << ',' << i + 1 << ',' << p.x_names[s] << ','
                    << p.x(t, i, s) << '\n';
            }
        }
    }
}

void write_w_covariates_csv(const std::string& path, const PanelDataset& p) {
    auto out = open_out(path);
    out << "t,j,name,value\n";
    for (int t = 0; t < p.T; ++t) {
        for (int j = 0; j < p.M; ++j) {
            for (int s = 0; s < p.pW; ++s) {
                out << t + 1 << ',' << j + 1 << ',' << p.w_names[s] << ','
                    << p.w(t, j, s) << '\n';
            }
        }
    }
}

void write_p_covariates_csv(const std::string& path, const PanelDataset& p) {
    auto out = open_out(path);
    out << "t,i,j,name,value\n";
    for (int t = 0; t < p.T; ++t) {
        for (int i = 0; i < p.N; ++i) {
            for (int j = 0; j < p.M; ++j) {
                for (int s = 0; s < p.pP; ++s) {
                    const double v = p.p(t, i, j, s);
                    if (v != 0.0) {
                        out << t + 1 << ',' << i + 1 << ',' << j + 1 << ','
                            << p.p_names[s] << ',' << v << '\n';
                    }
                }
            }
        }
    }
}

void write_exposures_csv(const std::string& path, const std::vector<std::uint8_t>& e,
                         int T, int M) {
    auto out = open_out(path);
    out << "t,j,e\n";
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < M; ++j) {
            out << t + 1 << ',' << j + 1 << ',' << int(e[size_t(t) * M + j]) << '\n';
        }
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_out(path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace bimatch
