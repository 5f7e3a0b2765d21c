#include "sagfree/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sagfree {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed, const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ParseError(path + ": unknown key \"" + it.key() + "\"");
    }
}

// Accepts a scalar broadcast, a full per-element array (size `full`), or just
// the interior entries (size `full - 1`, mapped to indices 1..full-1).
VectorXd per_element(const json& j, const std::string& key, int full, double fallback,
                     const std::string& path) {
    VectorXd v(full);
    if (!j.contains(key)) {
        v.setConstant(fallback);
        return v;
    }
    const json& e = j.at(key);
    if (e.is_number()) {
        v.setConstant(e.get<double>());
        return v;
    }
    if (!e.is_array()) throw ParseError(path + ": " + key + " must be a number or array");
    const int n = static_cast<int>(e.size());
    if (n == full) {
        for (int i = 0; i < full; ++i) v[i] = e[i].get<double>();
    } else if (n == full - 1) {
        for (int i = 1; i < full; ++i) v[i] = e[i - 1].get<double>();
        v[0] = v[1];
    } else {
        throw ParseError(path + ": " + key + " has length " + std::to_string(n) + ", expected " +
                         std::to_string(full) + " or " + std::to_string(full - 1));
    }
    return v;
}

StrandInput finish_strand(StrandConfig config, std::vector<Vector3d> x, VectorXd theta) {
    config.N = static_cast<int>(x.size());
    config.validate();
    StrandInput input;
    input.config = config;
    input.state.x = std::move(x);
    input.state.theta = std::move(theta);
    init_reference_frames(input.state);
    input.state.velocities = VectorXd::Zero(input.config.num_dofs());
    return input;
}

} // namespace

StrandInput load_strand_json(const std::string& path) {
    const json j = read_json_file(path);
    reject_unknown_keys(j, {"vertices", "thetas", "radius", "density", "c_st", "c_be", "c_tw"}, path);
    if (!j.contains("vertices") || !j.at("vertices").is_array())
        throw ParseError(path + ": missing vertices array");

    std::vector<Vector3d> x;
    for (const auto& row : j.at("vertices")) {
        if (!row.is_array() || row.size() != 3) throw ParseError(path + ": vertex rows must be [x,y,z]");
        x.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>());
    }
    const int N = static_cast<int>(x.size());
    if (N < 4) throw ParseError(path + ": need at least 4 vertices");

    VectorXd theta = VectorXd::Zero(N - 1);
    if (j.contains("thetas")) {
        const json& t = j.at("thetas");
        if (!t.is_array() || static_cast<int>(t.size()) != N - 1)
            throw ParseError(path + ": thetas must have one entry per edge");
        for (int e = 0; e < N - 1; ++e) theta[e] = t[e].get<double>();
    }

    StrandConfig config;
    config.radius = j.value("radius", config.radius);
    config.density = j.value("density", config.density);
    config.c_st = per_element(j, "c_st", N - 1, 1e9, path);
    config.c_be = per_element(j, "c_be", N - 1, 1e9, path);
    config.c_tw = per_element(j, "c_tw", N - 1, 1e9, path);
    return finish_strand(std::move(config), std::move(x), std::move(theta));
}

StrandInput load_strand_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Vector3d> x;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        Vector3d v;
        char sep;
        if (!(row >> v[0] >> sep >> v[1] >> sep >> v[2]))
            throw ParseError(path + ": bad vertex row \"" + line + "\"");
        x.push_back(v);
    }
    const int N = static_cast<int>(x.size());
    if (N < 4) throw ParseError(path + ": need at least 4 vertices");

    StrandConfig config;
    config.c_st = VectorXd::Constant(N - 1, 1e9);
    config.c_be = VectorXd::Constant(N - 1, 1e9);
    config.c_tw = VectorXd::Constant(N - 1, 1e9);
    return finish_strand(std::move(config), std::move(x), VectorXd::Zero(N - 1));
}

StrandInput load_strand(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return load_strand_json(path);
    return load_strand_csv(path);
}

void save_params_json(const std::string& path, const RestParams& rest, const AlmReport& report) {
    const int num_edges = static_cast<int>(rest.rest_len.size());
    json j;
    j["s"] = rest.s;
    j["rest_len"] = std::vector<double>(rest.rest_len.data(), rest.rest_len.data() + num_edges);
    j["alpha"] = std::vector<double>(rest.alpha.data(), rest.alpha.data() + num_edges);
    json curv = json::array();
    json twist = json::array();
    json beta = json::array();
    json gamma = json::array();
    for (int i = 1; i < num_edges; ++i) {
        curv.push_back({rest.rest_curv[i][0], rest.rest_curv[i][1]});
        twist.push_back(rest.rest_twist[i]);
        beta.push_back(rest.beta[i]);
        gamma.push_back(rest.gamma[i]);
    }
    j["rest_curv_2d"] = curv;
    j["rest_twist"] = twist;
    j["beta"] = beta;
    j["gamma"] = gamma;
    j["report"] = {{"status", to_string(report.status)},
                   {"iterations", report.iterations},
                   {"norm_c0", report.norm_c0},
                   {"norm_c", report.norm_c}};

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

RestParams load_params_json(const std::string& path, int N) {
    const json j = read_json_file(path);
    reject_unknown_keys(j, {"s", "rest_len", "rest_curv_2d", "rest_twist", "alpha", "beta", "gamma", "report"},
                        path);
    const int num_edges = N - 1;
    auto expect_array = [&](const char* key, int size) -> const json& {
        if (!j.contains(key) || !j.at(key).is_array() || static_cast<int>(j.at(key).size()) != size)
            throw ParseError(path + ": " + key + " must be an array of length " + std::to_string(size));
        return j.at(key);
    };

    RestParams rest;
    rest.s = j.value("s", 1.0);
    rest.rest_len.resize(num_edges);
    rest.alpha.resize(num_edges);
    const json& jl = expect_array("rest_len", num_edges);
    const json& ja = expect_array("alpha", num_edges);
    for (int e = 0; e < num_edges; ++e) {
        rest.rest_len[e] = jl[e].get<double>();
        rest.alpha[e] = ja[e].get<double>();
    }
    rest.rest_curv.assign(num_edges, Vector4d::Zero());
    rest.rest_twist = VectorXd::Zero(num_edges);
    rest.beta = VectorXd::Zero(num_edges);
    rest.gamma = VectorXd::Zero(num_edges);
    const json& jc = expect_array("rest_curv_2d", N - 2);
    const json& jt = expect_array("rest_twist", N - 2);
    const json& jb = expect_array("beta", N - 2);
    const json& jg = expect_array("gamma", N - 2);
    for (int i = 1; i < num_edges; ++i) {
        const auto& row = jc[i - 1];
        if (!row.is_array() || row.size() != 2) throw ParseError(path + ": rest_curv_2d rows must be [k0,k1]");
        const double k0 = row[0].get<double>();
        const double k1 = row[1].get<double>();
        rest.rest_curv[i] = Vector4d(k0, k1, k0, k1);
        rest.rest_twist[i] = jt[i - 1].get<double>();
        rest.beta[i] = jb[i - 1].get<double>();
        rest.gamma[i] = jg[i - 1].get<double>();
    }
    rest.beta[0] = rest.beta[1];
    rest.gamma[0] = rest.gamma[1];
    return rest;
}

void write_convergence_csv(const std::string& path, const AlmReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "# status=" << to_string(report.status) << " iterations=" << report.iterations
        << " norm_c0=" << report.norm_c0 << " norm_c=" << report.norm_c << "\n";
    out << "k,norm_dp,norm_c,mprgp_iters,wall_ns\n";
    for (const auto& r : report.history)
        out << r.k << "," << r.norm_dp << "," << r.norm_c << "," << r.mprgp_iters << "," << r.wall_ns << "\n";
}

AlmReport load_convergence_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    AlmReport report;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "status") {
                    for (AlmStatus s : {AlmStatus::Converged, AlmStatus::MaxIter, AlmStatus::LineSearchStalled,
                                        AlmStatus::Stationary})
                        if (val == to_string(s)) report.status = s;
                } else if (key == "iterations") {
                    report.iterations = std::stoi(val);
                } else if (key == "norm_c0") {
                    report.norm_c0 = std::stod(val);
                } else if (key == "norm_c") {
                    report.norm_c = std::stod(val);
                }
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true; // column header
            continue;
        }
        std::istringstream row(line);
        AlmIterRecord r;
        char sep;
        if (!(row >> r.k >> sep >> r.norm_dp >> sep >> r.norm_c >> sep >> r.mprgp_iters >> sep >> r.wall_ns))
            throw ParseError(path + ": bad row \"" + line + "\"");
        report.history.push_back(r);
    }
    return report;
}

void write_residual_csv(const std::string& path, const std::vector<ResidualSample>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "iteration,wall_ns,residual\n";
    for (const auto& r : history) out << r.iteration << "," << r.wall_ns << "," << r.residual << "\n";
}

std::vector<ResidualSample> load_residual_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<ResidualSample> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        ResidualSample r;
        char sep;
        if (!(row >> r.iteration >> sep >> r.wall_ns >> sep >> r.residual))
            throw ParseError(path + ": bad row \"" + line + "\"");
        out.push_back(r);
    }
    return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "frame,vertex,x,y,z\n";
    for (size_t f = 0; f < traj.frames.size(); ++f)
        for (size_t v = 0; v < traj.frames[f].size(); ++v) {
            const Vector3d& p = traj.frames[f][v];
            out << f << "," << v << "," << p[0] << "," << p[1] << "," << p[2] << "\n";
        }
}

void write_trajectory_obj(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    long base = 1;
    for (size_t f = 0; f < traj.frames.size(); ++f) {
        out << "o frame_" << f << "\n";
        const auto& verts = traj.frames[f];
        for (const Vector3d& p : verts) out << "v " << p[0] << " " << p[1] << " " << p[2] << "\n";
        out << "l";
        for (size_t v = 0; v < verts.size(); ++v) out << " " << base + static_cast<long>(v);
        out << "\n";
        base += static_cast<long>(verts.size());
    }
}

void write_kinetic_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "frame,kinetic_energy\n";
    for (size_t f = 0; f < traj.kinetic_energy.size(); ++f)
        out << f << "," << traj.kinetic_energy[f] << "\n";
}

} // namespace sagfree
