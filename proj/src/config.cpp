#include "qisd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace qisd {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "seed", "threads", "mass", "hbar", "mode",
        "potential.kind", "potential.omega", "potential.a", "potential.b", "potential.file",
        "coupling.f.kind", "coupling.f.value", "coupling.f.exponent", "coupling.f.file",
        "coupling.g.kind", "coupling.g.value", "coupling.g.exponent", "coupling.g.file",
        "cl.gamma", "cl.kbt",
        "kernel.D.kind", "kernel.D.amplitude", "kernel.D.correlation_time", "kernel.D.file",
        "kernel.N.kind", "kernel.N.amplitude", "kernel.N.correlation_time", "kernel.N.file",
        "grid.t_end", "grid.n_steps",
        "ensemble.n", "ensemble.policy",
        "init.kind", "init.x0", "init.v0", "init.var_x", "init.var_v", "init.cov_xv",
        "state.kind", "state.mean_x", "state.mean_p", "state.var_x", "state.var_p",
        "state.cov_xp", "state.alpha_re", "state.alpha_im", "state.omega", "state.kbt",
        "wigner.tau", "wigner.n_steps", "wigner.n_samples",
        "wigner.window.x_min", "wigner.window.x_max",
        "wigner.window.p_min", "wigner.window.p_max",
        "wigner.bins.x", "wigner.bins.p",
        "inverse.y0.min", "inverse.y0.max", "inverse.y0.count",
        "inverse.tau.min", "inverse.tau.max", "inverse.tau.count",
        "inverse.x_ref", "inverse.n_steps",
        "output.stride", "output.noise_paths", "output.dump_trajectories",
    };
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<double> load_column(const std::string& path, int column, int n_columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open table file " + path);
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::strtod(cell.c_str(), nullptr));
        if (static_cast<int>(cells.size()) < n_columns)
            throw IoError("table file " + path + ": expected " + std::to_string(n_columns) +
                          " columns");
        out.push_back(cells[static_cast<std::size_t>(column)]);
    }
    return out;
}

CouplingFunction build_coupling(const Config& cfg, const std::string& prefix) {
    const std::string kind = cfg.get_string(prefix + ".kind", "linear");
    if (kind == "linear") return CouplingFunction::linear();
    if (kind == "constant")
        return CouplingFunction::constant(cfg.get_double(prefix + ".value"));
    if (kind == "power")
        return CouplingFunction::power(static_cast<int>(cfg.get_int(prefix + ".exponent")));
    if (kind == "tabulated") {
        const std::string file = cfg.get_string(prefix + ".file");
        return CouplingFunction::tabulated(load_column(file, 0, 2), load_column(file, 1, 2));
    }
    throw ConfigError(prefix + ".kind: unknown coupling kind '" + kind + "'");
}

KernelSpec build_kernel(const Config& cfg, const std::string& prefix, bool symmetric_default) {
    const std::string kind = cfg.get_string(prefix + ".kind");
    if (kind == "delta") return KernelSpec::delta(cfg.get_double(prefix + ".amplitude"));
    if (kind == "delta_derivative")
        return KernelSpec::delta_derivative(cfg.get_double(prefix + ".amplitude"));
    if (kind == "exponential")
        return KernelSpec::exponential(cfg.get_double(prefix + ".amplitude"),
                                       cfg.get_double(prefix + ".correlation_time"));
    if (kind == "tabulated") {
        const std::string file = cfg.get_string(prefix + ".file");
        std::ifstream in(file);
        if (!in) throw IoError("cannot open kernel file " + file);
        std::vector<double> times;
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<double> cells;
            while (std::getline(ss, cell, ','))
                cells.push_back(std::strtod(cell.c_str(), nullptr));
            if (cells.size() < 2) throw IoError("kernel file " + file + ": short row");
            times.push_back(cells[0]);
            rows.emplace_back(cells.begin() + 1, cells.end());
        }
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd values(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
                throw IoError("kernel file " + file + ": matrix must be square");
            for (Eigen::Index j = 0; j < n; ++j)
                values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        return KernelSpec::tabulated(times, values, symmetric_default);
    }
    throw ConfigError(prefix + ".kind: unknown kernel kind '" + kind + "'");
}

} // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::stringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + stripped + "'",
                              line_no);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key or value",
                              line_no);
        if (!known_keys().count(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key +
                                  "'",
                              line_no);
        if (cfg.values_.count(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                                  key + "'",
                              line_no);
        cfg.values_[key] = {value, line_no};
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

int Config::line_of(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? -1 : it->second.second;
}

std::string Config::require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second.first;
}

std::string Config::get_string(const std::string& key) const { return require(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second.first;
}

double Config::get_double(const std::string& key) const {
    const std::string v = require(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(origin_ + ":" + std::to_string(line_of(key)) + ": key '" + key +
                              "' is not a number: '" + v + "'",
                          line_of(key));
    return x;
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
    const std::string v = require(key);
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(origin_ + ":" + std::to_string(line_of(key)) + ": key '" + key +
                              "' is not an integer: '" + v + "'",
                          line_of(key));
    return x;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string v = require(key);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(origin_ + ":" + std::to_string(line_of(key)) + ": key '" + key +
                              "' is not an unsigned integer: '" + v + "'",
                          line_of(key));
    return x;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(origin_ + ":" + std::to_string(line_of(key)) + ": key '" + key +
                          "' is not a boolean: '" + v + "'",
                      line_of(key));
}

void Config::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key))
        throw ConfigError(origin_ + ": unknown key '" + key + "'");
    values_[key] = {value, -1};
}

std::string Config::canonical_text() const {
    std::string out;
    for (const auto& [key, entry] : values_) {
        out += key;
        out += " = ";
        out += entry.first;
        out += "\n";
    }
    return out;
}

std::uint64_t Config::hash() const {
    // FNV-1a over the canonical text.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : canonical_text()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

LangevinSpec build_langevin_spec(const Config& cfg) {
    LangevinSpec spec;
    spec.mass = cfg.get_double("mass", 1.0);
    spec.hbar = cfg.get_double("hbar", 1.0);

    const std::string mode = cfg.get_string("mode", "qisd");
    if (mode == "qisd") spec.mode = CouplingMode::qisd;
    else if (mode == "langevin") spec.mode = CouplingMode::langevin;
    else throw ConfigError("mode: expected 'qisd' or 'langevin', got '" + mode + "'");

    const std::string pot = cfg.get_string("potential.kind", "free");
    if (pot == "free") {
        spec.potential = Potential::free_particle();
    } else if (pot == "harmonic") {
        const double omega = cfg.get_double("potential.omega");
        spec.potential = Potential::harmonic(spec.mass * omega * omega);
    } else if (pot == "quartic") {
        spec.potential = Potential::quartic(cfg.get_double("potential.a"),
                                            cfg.get_double("potential.b"));
    } else if (pot == "tabulated") {
        const std::string file = cfg.get_string("potential.file");
        spec.potential = Potential::tabulated(load_column(file, 0, 2), load_column(file, 1, 2));
    } else {
        throw ConfigError("potential.kind: unknown potential '" + pot + "'");
    }

    spec.f = build_coupling(cfg, "coupling.f");
    spec.g = build_coupling(cfg, "coupling.g");

    const bool has_cl = cfg.has("cl.gamma") || cfg.has("cl.kbt");
    const bool has_kernels = cfg.has("kernel.D.kind") || cfg.has("kernel.N.kind");
    if (has_cl && has_kernels)
        throw ConfigError("give either cl.gamma/cl.kbt or kernel.D/kernel.N, not both");
    if (has_cl) {
        auto [d, n] = cl_kernels(cfg.get_double("cl.gamma"), cfg.get_double("cl.kbt"));
        spec.dissipation = d;
        spec.noise = n;
    } else if (has_kernels) {
        spec.dissipation = build_kernel(cfg, "kernel.D", false);
        spec.noise = build_kernel(cfg, "kernel.N", true);
    }
    spec.validate();
    return spec;
}

TimeGrid build_time_grid(const Config& cfg) {
    return TimeGrid(cfg.get_double("grid.t_end"),
                    static_cast<std::size_t>(cfg.get_int("grid.n_steps")));
}

StateSpec build_state_spec(const Config& cfg, const LangevinSpec& spec) {
    const std::string kind = cfg.get_string("state.kind");
    if (kind == "gaussian")
        return StateSpec::gaussian(cfg.get_double("state.mean_x", 0.0),
                                   cfg.get_double("state.mean_p", 0.0),
                                   cfg.get_double("state.var_x"),
                                   cfg.get_double("state.var_p"),
                                   cfg.get_double("state.cov_xp", 0.0));
    if (kind == "coherent")
        return StateSpec::coherent(cfg.get_double("state.alpha_re", 0.0),
                                   cfg.get_double("state.alpha_im", 0.0),
                                   cfg.get_double("state.omega"), spec.mass, spec.hbar);
    if (kind == "thermal")
        return StateSpec::thermal(cfg.get_double("state.omega"), spec.mass,
                                  cfg.get_double("state.kbt"), spec.hbar);
    if (kind == "fock1")
        return StateSpec::fock1(cfg.get_double("state.omega"), spec.mass, spec.hbar);
    throw ConfigError("state.kind: unknown state '" + kind + "'");
}

InitDistribution build_init_distribution(const Config& cfg, const LangevinSpec& spec) {
    const std::string kind = cfg.get_string("init.kind", "point");
    if (kind == "point")
        return InitDistribution::point(cfg.get_double("init.x0", 0.0),
                                       cfg.get_double("init.v0", 0.0));
    if (kind == "gaussian")
        return InitDistribution::gaussian(
            cfg.get_double("init.x0", 0.0), cfg.get_double("init.v0", 0.0),
            cfg.get_double("init.var_x"), cfg.get_double("init.var_v"),
            cfg.get_double("init.cov_xv", 0.0));
    if (kind == "state") {
        const StateSpec st = build_state_spec(cfg, spec);
        if (st.kind == StateSpec::Kind::fock1)
            throw ConfigError("init.kind = state: signed states cannot seed a plain ensemble");
        const double m = spec.mass;
        return InitDistribution::gaussian(st.mean_x, st.mean_p / m, st.var_x,
                                          st.var_p / (m * m), st.cov_xp / m);
    }
    throw ConfigError("init.kind: unknown init '" + kind + "'");
}

} // namespace qisd
