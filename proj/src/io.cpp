#include "ddcrane/io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ddcrane/qp.hpp"

namespace ddcrane {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15e", x);
    return buf;
}

void ensure_directory(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) ensure_directory(p.parent_path().string());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

namespace {

void write_meta(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta) os << "# " << k << ": " << v << "\n";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& t, const Metadata& meta) {
    t.validate();
    Metadata m = meta;
    m["rate"] = format_double(t.rate);
    m["inputs"] = std::to_string(t.m);
    std::ostringstream os;
    write_meta(os, m);
    os << "t";
    for (const auto& n : t.channel_names) os << "," << n;
    os << "\n";
    for (Index i = 0; i < t.samples(); ++i) {
        os << format_double(static_cast<double>(i) / t.rate);
        for (int c = 0; c < t.q; ++c) os << "," << format_double(t(i, c));
        os << "\n";
    }
    write_text(path, os.str());
}

Trajectory read_trajectory_csv(const std::string& path, Metadata* meta) {
    std::istringstream is(read_text(path));
    std::string line;
    Metadata m;
    std::vector<std::string> header;
    std::vector<double> values;
    Index rows = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find(':');
            if (pos != std::string::npos) {
                std::string k = line.substr(1, pos - 1), v = line.substr(pos + 1);
                auto trim = [](std::string s) {
                    const auto a = s.find_first_not_of(' ');
                    const auto b = s.find_last_not_of(' ');
                    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
                };
                m[trim(k)] = trim(v);
            }
            continue;
        }
        if (header.empty()) {
            header = split(line, ',');
            if (header.size() < 3 || header[0] != "t") throw Error(path + ": bad trajectory header");
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) throw Error(path + ": ragged row");
        for (std::size_t c = 1; c < cells.size(); ++c) values.push_back(std::stod(cells[c]));
        ++rows;
    }
    if (header.empty()) throw Error(path + ": missing header");
    const int q = static_cast<int>(header.size()) - 1;
    const double rate = m.count("rate") ? std::stod(m["rate"]) : 20.0;
    const int inputs = m.count("inputs") ? std::stoi(m["inputs"]) : 1;
    Eigen::VectorXd data = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
    if (meta) *meta = m;
    (void)rows;
    return {q, inputs, rate, std::move(data), std::vector<std::string>(header.begin() + 1, header.end())};
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows, const Metadata& meta) {
    std::ostringstream os;
    write_meta(os, meta);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
        os << "\n";
    }
    write_text(path, os.str());
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& M) {
    const fs::path p(path);
    if (p.has_parent_path()) ensure_directory(p.parent_path().string());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    const std::uint64_t r = static_cast<std::uint64_t>(M.rows()), c = static_cast<std::uint64_t>(M.cols());
    f.write("DDCM", 4);
    f.write(reinterpret_cast<const char*>(&r), sizeof r);
    f.write(reinterpret_cast<const char*>(&c), sizeof c);
    f.write(reinterpret_cast<const char*>(M.data()), static_cast<std::streamsize>(sizeof(double) * r * c));
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    char magic[4];
    f.read(magic, 4);
    if (std::memcmp(magic, "DDCM", 4) != 0) throw Error(path + ": not a matrix archive");
    std::uint64_t r = 0, c = 0;
    f.read(reinterpret_cast<char*>(&r), sizeof r);
    f.read(reinterpret_cast<char*>(&c), sizeof c);
    Eigen::MatrixXd M(static_cast<Index>(r), static_cast<Index>(c));
    f.read(reinterpret_cast<char*>(M.data()), static_cast<std::streamsize>(sizeof(double) * r * c));
    if (!f) throw Error(path + ": truncated matrix archive");
    return M;
}

void save_model(const std::string& dir, const BehaviorModel& model, const Metadata& meta) {
    ensure_directory(dir);
    write_matrix((fs::path(dir) / "model.bin").string(), model.M);
    json j;
    j["L"] = model.L;
    j["q"] = model.q;
    j["m"] = model.m;
    j["rate"] = model.rate;
    j["nu"] = model.nu;
    j["delta"] = model.delta;
    j["delta_relative"] = model.delta_relative;
    j["is_hankel"] = model.is_hankel;
    j["channel_names"] = model.channel_names;
    j["rows"] = model.rows();
    j["cols"] = model.cols();
    for (const auto& [k, v] : meta) j["meta"][k] = v;
    write_text((fs::path(dir) / "model.json").string(), j.dump(2) + "\n");
}

BehaviorModel load_model(const std::string& dir) {
    const json j = json::parse(read_text((fs::path(dir) / "model.json").string()));
    BehaviorModel m;
    m.M = read_matrix((fs::path(dir) / "model.bin").string());
    m.L = j.at("L").get<Index>();
    m.q = j.at("q").get<int>();
    m.m = j.at("m").get<int>();
    m.rate = j.at("rate").get<double>();
    m.nu = j.at("nu").get<Index>();
    m.delta = j.at("delta").get<double>();
    m.delta_relative = j.value("delta_relative", true);
    m.is_hankel = j.at("is_hankel").get<bool>();
    m.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    m.validate();
    return m;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void dump_problem(const CompositeQP& pr, const std::string& dir) {
    ensure_directory(dir);
    auto put = [&](const char* name, const Eigen::MatrixXd& M) {
        write_matrix((fs::path(dir) / name).string(), M);
    };
    put("P.bin", pr.P);
    put("q.bin", pr.q);
    put("A_eq.bin", pr.A_eq);
    put("b_eq.bin", pr.b_eq);
    put("A_in.bin", pr.A_in);
    put("b_in.bin", pr.b_in);
    json j;
    j["lambda"] = pr.lambda;
    j["offset"] = pr.offset;
    j["n"] = pr.dim();
    j["eq_rows"] = pr.A_eq.rows();
    j["in_rows"] = pr.A_in.rows();
    j["objective"] = "0.5 g'Pg + q'g + lambda |g|_1 + offset, A_eq g = b_eq, A_in g <= b_in";
    write_text((fs::path(dir) / "problem.json").string(), j.dump(2) + "\n");
}

CompositeQP load_problem(const std::string& dir) {
    const json j = json::parse(read_text((fs::path(dir) / "problem.json").string()));
    auto get = [&](const char* name) { return read_matrix((fs::path(dir) / name).string()); };
    CompositeQP pr;
    pr.P = get("P.bin");
    pr.q = get("q.bin");
    pr.A_eq = get("A_eq.bin");
    pr.b_eq = get("b_eq.bin");
    pr.A_in = get("A_in.bin");
    pr.b_in = get("b_in.bin");
    pr.lambda = j.at("lambda").get<double>();
    pr.offset = j.value("offset", 0.0);
    pr.normalize();
    pr.validate();
    return pr;
}

}  // namespace ddcrane
