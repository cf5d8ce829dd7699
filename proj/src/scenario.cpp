#include "poromem/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace poromem {

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

SectionMap parse_sections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    SectionMap out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            out[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        out[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
}

double to_double(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw std::runtime_error("config key " + where + ": not a number: '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& where) {
    const double d = to_double(v, where);
    const int i = static_cast<int>(std::lround(d));
    if (std::abs(d - i) > 0)
        throw std::runtime_error("config key " + where + ": not an integer: '" + v + "'");
    return i;
}

std::vector<int> to_int_list(const std::string& v, const std::string& where) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(trim(item), where));
    if (out.empty()) throw std::runtime_error("config key " + where + ": empty list");
    return out;
}

BoundaryTag to_tag(const std::string& v, const std::string& where) {
    if (v == "dirichlet") return BoundaryTag::Dirichlet;
    if (v == "neumann") return BoundaryTag::Neumann;
    throw std::runtime_error("config key " + where + ": expected dirichlet|neumann, got '" + v +
                             "'");
}

FieldSpec to_field_spec(const std::string& v, const std::string& where) {
    FieldSpec spec;
    const auto colon = v.find(':');
    if (colon == std::string::npos)
        throw std::runtime_error("config key " + where + ": expected const:v or ramp:a,width");
    spec.kind = trim(v.substr(0, colon));
    const std::string rest = trim(v.substr(colon + 1));
    if (spec.kind == "const") {
        spec.value = to_double(rest, where);
    } else if (spec.kind == "ramp") {
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("config key " + where + ": ramp needs 'a,width'");
        spec.value = to_double(trim(rest.substr(0, comma)), where);
        spec.width = to_double(trim(rest.substr(comma + 1)), where);
        if (spec.width <= 0.0)
            throw std::runtime_error("config key " + where + ": ramp width must be positive");
    } else {
        throw std::runtime_error("config key " + where + ": unknown field kind '" + spec.kind +
                                 "'");
    }
    return spec;
}

// Applies `fn(key, value)` and rejects unrecognized keys so typos are
// reported rather than silently ignored.
template <typename Fn>
void consume_section(const SectionMap& sections, const std::string& name, Fn fn) {
    const auto it = sections.find(name);
    if (it == sections.end()) return;
    for (const auto& [key, value] : it->second)
        if (!fn(key, value))
            throw std::runtime_error("unknown config key [" + name + "] " + key);
}

void fill_material_params(const SectionMap& sections, const std::string& section,
                          VanGenuchtenParams& mp) {
    consume_section(sections, section, [&](const std::string& k, const std::string& v) {
        const std::string w = "[" + section + "] " + k;
        if (k == "alpha_vg") mp.alpha_vg = to_double(v, w);
        else if (k == "n_vg") mp.n_vg = to_double(v, w);
        else if (k == "S_res") mp.S_res = to_double(v, w);
        else if (k == "S_s") mp.S_s = to_double(v, w);
        else if (k == "sigma_blend") mp.sigma_blend = to_double(v, w);
        else if (k == "kappa_floor") mp.kappa_floor = to_double(v, w);
        else if (k == "k1") mp.k1 = to_double(v, w);
        else if (k == "k2") mp.k2 = to_double(v, w);
        else if (k == "c_k") mp.c_k = to_double(v, w);
        else if (k == "mu1") mp.mu1 = to_double(v, w);
        else if (k == "mu2") mp.mu2 = to_double(v, w);
        else if (k == "theta_scale") mp.theta_scale = to_double(v, w);
        else if (k == "phi_a") mp.phi_a = to_double(v, w);
        else if (k == "phi_b") mp.phi_b = to_double(v, w);
        else if (k == "rho_a") mp.rho_a = to_double(v, w);
        else if (k == "rho_b") mp.rho_b = to_double(v, w);
        else if (k == "d0") mp.d0 = to_double(v, w);
        else if (k == "lambda0") mp.lambda0 = to_double(v, w);
        else if (k == "lambda_S") mp.lambda_S = to_double(v, w);
        else if (k == "lambda_r") mp.lambda_r = to_double(v, w);
        else if (k == "A") mp.A = to_double(v, w);
        else if (k == "r_max") mp.r_max = to_double(v, w);
        else if (k == "kappa_g") mp.kappa_g = to_double(v, w);
        else if (k == "E_a") mp.E_a = to_double(v, w);
        else if (k == "theta_off") mp.theta_off = to_double(v, w);
        else if (k == "alpha1") mp.alpha1 = to_double(v, w);
        else if (k == "alpha2") mp.alpha2 = to_double(v, w);
        else return false;
        return true;
    });
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_traj_header(std::ostream& os, int nodes, int levels, double h) {
    os << "POROMEM-TRAJ v1\n"
       << "nodes " << nodes << "\n"
       << "levels " << levels << "\n"
       << "h " << fmt(h) << "\n"
       << "fields p c theta r\n"
       << "END\n";
}

void write_traj_block(std::ostream& os, const StateFields& s, int nodes) {
    auto wr = [&](const std::vector<double>& v) {
        if (static_cast<int>(v.size()) != nodes)
            throw std::runtime_error("trajectory write: field size mismatch");
        os.write(reinterpret_cast<const char*>(v.data()),
                 static_cast<std::streamsize>(nodes) * 8);
    };
    wr(s.p);
    wr(s.c);
    wr(s.th);
    wr(s.r);
}

}  // namespace

std::string resolve_config_path(const std::string& path, const std::string& base_dir) {
    if (fs::exists(path)) return path;
    if (!base_dir.empty()) {
        const fs::path rel = fs::path(base_dir) / path;
        if (fs::exists(rel)) return rel.string();
    }
    if (const char* env = std::getenv("POROMEM_CONFIG_DIR")) {
        const fs::path rel = fs::path(env) / path;
        if (fs::exists(rel)) return rel.string();
    }
    throw std::runtime_error("config file not found: " + path +
                             " (searched as given, relative to the scenario, and in "
                             "$POROMEM_CONFIG_DIR)");
}

VanGenuchtenParams load_material_config(const std::string& path) {
    const SectionMap sections = parse_sections(path);
    VanGenuchtenParams mp;
    fill_material_params(sections, "van_genuchten", mp);
    return mp;
}

Scenario load_scenario(const std::string& path) {
    const SectionMap sections = parse_sections(path);
    Scenario sc;
    sc.name = fs::path(path).stem().string();
    const std::string base_dir = fs::path(path).parent_path().string();

    consume_section(sections, "scenario", [&](const std::string& k, const std::string& v) {
        if (k == "name") sc.name = v;
        else return false;
        return true;
    });

    consume_section(sections, "mesh", [&](const std::string& k, const std::string& v) {
        const std::string w = "[mesh] " + k;
        if (k == "nx") sc.mesh.nx = to_int(v, w);
        else if (k == "ny") sc.mesh.ny = to_int(v, w);
        else if (k == "lx") sc.mesh.lx = to_double(v, w);
        else if (k == "ly") sc.mesh.ly = to_double(v, w);
        else if (k == "left") sc.mesh.boundary.left = to_tag(v, w);
        else if (k == "right") sc.mesh.boundary.right = to_tag(v, w);
        else if (k == "bottom") sc.mesh.boundary.bottom = to_tag(v, w);
        else if (k == "top") sc.mesh.boundary.top = to_tag(v, w);
        else return false;
        return true;
    });

    consume_section(sections, "material", [&](const std::string& k, const std::string& v) {
        if (k == "manufactured") {
            if (v != "smooth" && v != "constant")
                throw std::runtime_error(
                    "config key [material] manufactured: expected smooth|constant");
            sc.manufactured = true;
            sc.manufactured_name = v;
        } else if (k == "config") {
            sc.material = load_material_config(resolve_config_path(v, base_dir));
        } else {
            return false;
        }
        return true;
    });
    // Inline parameter overrides on top of any referenced config file.
    fill_material_params(sections, "van_genuchten", sc.material);

    consume_section(sections, "initial", [&](const std::string& k, const std::string& v) {
        const std::string w = "[initial] " + k;
        if (k == "p0") sc.p0 = to_field_spec(v, w);
        else if (k == "c0") sc.c0 = to_field_spec(v, w);
        else if (k == "th0") sc.th0 = to_field_spec(v, w);
        else if (k == "p1") sc.p1 = to_double(v, w);
        else return false;
        return true;
    });

    consume_section(sections, "scheme", [&](const std::string& k, const std::string& v) {
        const std::string w = "[scheme] " + k;
        if (k == "T") sc.scheme.T = to_double(v, w);
        else if (k == "n") sc.scheme.n = to_int(v, w);
        else if (k == "newton_tol") sc.scheme.newton_tol = to_double(v, w);
        else if (k == "newton_max_iter") sc.scheme.newton_max_iter = to_int(v, w);
        else if (k == "linear_solver") sc.scheme.linear_solver = v;
        else if (k == "linear_tol") sc.scheme.linear_tol = to_double(v, w);
        else if (k == "max_h_halvings") sc.scheme.max_h_halvings = to_int(v, w);
        else if (k == "q") sc.scheme.q = to_double(v, w);
        else if (k == "C_E") sc.scheme.C_E = to_double(v, w);
        else if (k == "ell_override") sc.scheme.ell_override = to_double(v, w);
        else if (k == "ell_slack") sc.scheme.ell_slack = to_double(v, w);
        else return false;
        return true;
    });

    consume_section(sections, "diagnostics", [&](const std::string& k, const std::string& v) {
        const std::string w = "[diagnostics] " + k;
        if (k == "lags") sc.diagnostics.lags = to_int_list(v, w);
        else if (k == "temporal_test_functions")
            sc.diagnostics.temporal_test_functions = to_int(v, w);
        else if (k == "c_linf_tol") sc.diagnostics.c_linf_tol = to_double(v, w);
        else if (k == "rate_tol") sc.diagnostics.rate_tol = to_double(v, w);
        else return false;
        return true;
    });

    consume_section(sections, "convergence", [&](const std::string& k, const std::string& v) {
        const std::string w = "[convergence] " + k;
        if (k == "mesh_levels") sc.convergence.mesh_levels = to_int_list(v, w);
        else if (k == "n_levels") sc.convergence.n_levels = to_int_list(v, w);
        else if (k == "reference_n") sc.convergence.reference_n = to_int(v, w);
        else return false;
        return true;
    });

    for (const auto& [name, kv] : sections) {
        (void)kv;
        if (name != "scenario" && name != "mesh" && name != "material" &&
            name != "van_genuchten" && name != "initial" && name != "scheme" &&
            name != "diagnostics" && name != "convergence")
            throw std::runtime_error("unknown config section [" + name + "]");
    }
    return sc;
}

std::vector<double> make_nodal_field(const FieldSpec& spec, const Mesh& mesh) {
    std::vector<double> out(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        if (spec.kind == "const") {
            out[i] = spec.value;
        } else {  // ramp: zero on the Dirichlet boundary by construction
            const double d = distance_to_dirichlet(mesh, mesh.nodes[i]);
            out[i] = spec.value * std::min(1.0, d / spec.width);
        }
    }
    return out;
}

ScenarioRuntime instantiate_scenario(const Scenario& sc) {
    ScenarioRuntime rt;
    rt.mesh = build_structured_mesh(sc.mesh.nx, sc.mesh.ny, sc.mesh.lx, sc.mesh.ly,
                                    sc.mesh.boundary);
    {
        const auto issues = validate_mesh(rt.mesh);
        if (!issues.empty()) throw std::runtime_error("mesh validation: " + issues.front());
    }

    if (sc.manufactured) {
        rt.is_manufactured = true;
        rt.mc = sc.manufactured_name == "smooth" ? make_smooth_case() : make_constant_case();
        rt.model = rt.mc.model;
        rt.init = rt.mc.initial_data(rt.mesh);
        SampleGrid grid = SampleGrid::standard(rt.model);
        // The manufactured family has a state-independent hydration rate, so
        // the deep-suction smallness limit is deliberately out of scope.
        grid.check_smallness_limit = false;
        const auto issues = validate_assumptions(rt.model, grid);
        if (!issues.empty()) throw std::runtime_error("model validation: " + issues.front());
        const auto nd = rt.mc.check_nondegeneracy(rt.mesh);
        if (!nd.empty()) throw std::runtime_error("nondegeneracy certificate: " + nd.front());
    } else {
        rt.model = make_van_genuchten_model(sc.material);
        const auto issues = validate_assumptions(rt.model, SampleGrid::standard(rt.model));
        if (!issues.empty()) throw std::runtime_error("model validation: " + issues.front());
        rt.init.p0 = make_nodal_field(sc.p0, rt.mesh);
        rt.init.c0 = make_nodal_field(sc.c0, rt.mesh);
        rt.init.th0 = make_nodal_field(sc.th0, rt.mesh);
        rt.init.p1 = sc.p1;
    }
    const auto issues = validate_initial(rt.init, rt.mesh);
    if (!issues.empty()) throw std::runtime_error("initial data validation: " + issues.front());
    return rt;
}

// --- Trajectory persistence ---

TrajectoryFileWriter::TrajectoryFileWriter(std::string path, int num_nodes)
    : path_(std::move(path)), num_nodes_(num_nodes) {}

void TrajectoryFileWriter::begin(int n_levels, double h) {
    out_ = std::make_unique<std::ofstream>(path_, std::ios::binary | std::ios::trunc);
    if (!*out_) throw std::runtime_error("cannot open trajectory file for writing: " + path_);
    declared_levels_ = n_levels;
    written_ = 0;
    write_traj_header(*out_, num_nodes_, n_levels, h);
}

void TrajectoryFileWriter::append(const StateFields& state) {
    if (!out_) throw std::runtime_error("trajectory writer: append before begin");
    write_traj_block(*out_, state, num_nodes_);
    ++written_;
}

void TrajectoryFileWriter::close() {
    if (out_) {
        out_->flush();
        out_.reset();
    }
}

LevelSink TrajectoryFileWriter::sink() {
    LevelSink s;
    s.begin = [this](int n_levels, double h) { begin(n_levels, h); };
    s.append = [this](const StateFields& st) { append(st); };
    return s;
}

void write_trajectory(const std::string& path, const TrajectoryView& traj, int num_nodes) {
    TrajectoryFileWriter w(path, num_nodes);
    w.begin(traj.num_levels(), traj.step_size());
    for (int i = 0; i < traj.num_levels(); ++i) w.append(traj.level(i));
    w.close();
}

FileTrajectory::FileTrajectory(const std::string& path, int cache_capacity)
    : path_(path), capacity_(std::max(cache_capacity, 4)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trajectory file: " + path_);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "POROMEM-TRAJ v1")
        throw std::runtime_error("trajectory integrity error: bad magic in " + path_);
    bool fields_ok = false;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t == "END") break;
        std::istringstream ss(t);
        std::string key, val;
        ss >> key;
        std::getline(ss, val);
        val = trim(val);
        if (key == "nodes") num_nodes_ = to_int(val, "trajectory header nodes");
        else if (key == "levels") n_levels_ = to_int(val, "trajectory header levels");
        else if (key == "h") h_ = to_double(val, "trajectory header h");
        else if (key == "fields") fields_ok = (val == "p c theta r");
        else throw std::runtime_error("trajectory integrity error: unknown header key " + key);
    }
    if (num_nodes_ <= 0 || n_levels_ <= 0 || !(h_ > 0.0) || !fields_ok)
        throw std::runtime_error("trajectory integrity error: incomplete header in " + path_);
    data_offset_ = in.tellg();
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    const std::streamoff expected =
        data_offset_ + static_cast<std::streamoff>(4) * 8 * num_nodes_ * n_levels_;
    if (size != expected)
        throw std::runtime_error("trajectory integrity error: expected " +
                                 std::to_string(expected) + " bytes, found " +
                                 std::to_string(size) + " in " + path_);
}

const StateFields& FileTrajectory::level(int i) const {
    if (i < 0 || i >= n_levels_)
        throw std::out_of_range("trajectory level " + std::to_string(i) + " out of range");
    auto it = cache_.find(i);
    if (it != cache_.end()) {
        lru_.remove(i);
        lru_.push_front(i);
        return it->second;
    }
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw std::runtime_error("cannot reopen trajectory file: " + path_);
    in.seekg(data_offset_ + static_cast<std::streamoff>(i) * 4 * 8 * num_nodes_);
    StateFields s;
    auto rd = [&](std::vector<double>& v) {
        v.resize(num_nodes_);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(num_nodes_) * 8);
    };
    rd(s.p);
    rd(s.c);
    rd(s.th);
    rd(s.r);
    if (!in) throw std::runtime_error("trajectory integrity error: short read in " + path_);
    s.level_index = i;
    s.time = i * h_;
    if (static_cast<int>(cache_.size()) >= capacity_) {
        cache_.erase(lru_.back());
        lru_.pop_back();
    }
    lru_.push_front(i);
    return cache_.emplace(i, std::move(s)).first->second;
}

// --- Reports ---

std::string report_to_json(const DiagnosticsReport& rep, const std::string& scenario_name,
                           int n_levels, double h, double ell_used,
                           const PressureBoundResult& bound) {
    ordered_json j;
    j["scenario"] = scenario_name;
    j["levels"] = n_levels;
    j["h"] = h;
    j["ell_used"] = ell_used;

    ordered_json jb;
    jb["found"] = bound.found;
    jb["ell"] = bound.ell;
    jb["delta"] = bound.delta;
    jb["gamma"] = bound.gamma;
    jb["tau"] = bound.tau;
    jb["q"] = bound.q;
    jb["C_E"] = bound.C_E;
    jb["domain_area"] = bound.domain_area;
    jb["searched_delta"] = bound.searched_delta;
    jb["searched_gamma"] = bound.searched_gamma;
    j["pressure_bound"] = jb;

    ordered_json jm;
    jm["theoretical_ell"] = rep.max_principle.theoretical_ell;
    jm["observed_min"] = rep.max_principle.observed_min;
    jm["has_bound"] = rep.max_principle.has_bound;
    jm["pass"] = rep.max_principle.pass;
    j["max_principle"] = jm;

    j["linf"] = ordered_json::array();
    for (const LinfBound& b : rep.linf) {
        ordered_json e;
        e["field"] = b.field;
        e["bound"] = b.bound;
        e["observed"] = b.observed;
        e["has_bound"] = b.has_bound;
        e["pass"] = b.pass;
        j["linf"].push_back(e);
    }

    j["energy_sup"] = rep.energy_sup;
    j["energy_series"] = rep.energy_series;

    j["translates"] = ordered_json::array();
    for (const TranslateRow& t : rep.translates) {
        ordered_json e;
        e["k"] = t.k;
        e["T1"] = t.T1;
        e["T2"] = t.T2;
        e["T3"] = t.T3;
        e["T4"] = t.T4;
        e["T1_plain"] = t.T1_plain;
        e["r1"] = t.r1;
        e["r2"] = t.r2;
        e["r3"] = t.r3;
        e["r4"] = t.r4;
        j["translates"].push_back(e);
    }

    ordered_json jw;
    jw["p_eq"] = rep.weak.p_eq;
    jw["c_eq"] = rep.weak.c_eq;
    jw["th_eq"] = rep.weak.th_eq;
    jw["memory_identity"] = rep.weak.memory_identity;
    jw["temporal_basis"] = rep.weak.temporal_basis;
    jw["spatial_basis"] = rep.weak.spatial_basis;
    j["weak_residuals"] = jw;

    ordered_json jh;
    jh["C_f"] = rep.hydration.C_f;
    jh["max_rate"] = rep.hydration.max_rate;
    jh["pass"] = rep.hydration.pass;
    j["hydration_rate"] = jh;

    ordered_json jd;
    jd["gamma"] = rep.degiorgi_gamma;
    jd["tau"] = rep.degiorgi_tau;
    jd["delta"] = rep.degiorgi_delta;
    jd["d"] = rep.degiorgi_d;
    jd["k"] = rep.degiorgi_k;
    jd["Z"] = rep.degiorgi_Z;
    j["degiorgi_trace"] = jd;

    j["all_pass"] = rep.all_pass;
    return j.dump(2) + "\n";
}

std::string report_summary(const DiagnosticsReport& rep) {
    std::ostringstream os;
    auto pf = [](bool b) { return b ? "PASS" : "FAIL"; };
    if (rep.max_principle.has_bound)
        os << pf(rep.max_principle.pass) << " max_principle: observed_min_p="
           << fmt(rep.max_principle.observed_min)
           << " >= ell=" << fmt(rep.max_principle.theoretical_ell) << "\n";
    else
        os << pf(rep.max_principle.pass) << " max_principle: no derived bound; observed_min_p="
           << fmt(rep.max_principle.observed_min) << " checked against truncation level "
           << fmt(rep.max_principle.theoretical_ell) << "\n";
    for (const LinfBound& b : rep.linf) {
        os << pf(b.pass) << " linf_" << b.field << ": observed=" << fmt(b.observed);
        if (b.has_bound) os << " bound=" << fmt(b.bound);
        else os << " (no theoretical bound; recorded for cross-run comparison)";
        os << "\n";
    }
    os << pf(rep.hydration.pass) << " hydration_rate: max|dr|/h=" << fmt(rep.hydration.max_rate)
       << " <= C_f=" << fmt(rep.hydration.C_f) << "\n";
    os << "INFO energy_sup=" << fmt(rep.energy_sup) << "\n";
    for (const TranslateRow& t : rep.translates)
        os << "INFO translate k=" << t.k << " r1=" << fmt(t.r1) << " r2=" << fmt(t.r2)
           << " r3=" << fmt(t.r3) << " r4=" << fmt(t.r4) << "\n";
    os << "INFO weak_residuals p=" << fmt(rep.weak.p_eq) << " c=" << fmt(rep.weak.c_eq)
       << " theta=" << fmt(rep.weak.th_eq) << " memory=" << fmt(rep.weak.memory_identity)
       << "\n";
    os << "OVERALL " << pf(rep.all_pass) << "\n";
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

// --- CLI drivers ---

namespace {

std::string locate_scenario(const std::string& path) { return resolve_config_path(path, ""); }

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
    return dir.empty() ? name : (fs::path(dir) / name).string();
}

}  // namespace

int cli_run(const std::string& scenario_path, const std::string& out_dir, int n_override,
            bool streaming, int threads) {
    (void)threads;  // runs are internally sequential; flag reserved
    try {
        const Scenario sc = load_scenario(locate_scenario(scenario_path));
        ScenarioRuntime rt = instantiate_scenario(sc);
        SchemeConfig scheme = sc.scheme;
        if (n_override > 0) scheme.n = n_override;
        ensure_dir(out_dir);
        const std::string traj_path = join_path(out_dir, sc.name + ".traj");

        TrajectoryFileWriter writer(traj_path, rt.mesh.num_nodes());
        const LevelSink sink = writer.sink();
        RunResult rr =
            run(rt.mesh, rt.model, rt.init, scheme, rt.sources(), &sink, !streaming);
        writer.close();

        if (!rr.completed) {
            std::cout << "FAIL run: " << rr.error << "\n";
            return 1;
        }

        std::unique_ptr<FileTrajectory> ftraj;
        const TrajectoryView* view = &rr.trajectory;
        if (streaming) {
            ftraj = std::make_unique<FileTrajectory>(traj_path);
            view = ftraj.get();
        }
        const DiagnosticsReport rep = run_diagnostics(*view, rt.mesh, rt.model, sc.diagnostics,
                                                      rr.bound, rr.ell_used, rt.sources());

        const std::string summary = report_summary(rep);
        write_text_file(join_path(out_dir, sc.name + ".report.json"),
                        report_to_json(rep, sc.name, view->num_levels(), view->step_size(),
                                       rr.ell_used, rr.bound));
        write_text_file(join_path(out_dir, sc.name + ".report.txt"), summary);
        {
            std::ostringstream info;
            info << "n_effective " << rr.n_effective << "\nhalvings " << rr.halvings
                 << "\nobserved_min_p " << fmt(rr.observed_min_p) << "\nell_used "
                 << fmt(rr.ell_used) << "\n";
            write_text_file(join_path(out_dir, sc.name + ".run_info.txt"), info.str());
        }
        std::cout << summary;
        return rep.all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cli_convergence(const std::string& scenario_path, const std::string& out_dir, int n_override,
                    int threads) {
    (void)threads;
    try {
        const Scenario sc = load_scenario(locate_scenario(scenario_path));
        if (!sc.manufactured) {
            std::cerr << "error: [material] manufactured = smooth|constant is required for the "
                         "convergence subcommand\n";
            return 2;
        }
        ScenarioRuntime rt = instantiate_scenario(sc);
        ConvergenceSpec cv = sc.convergence;
        if (n_override > 0) cv.n_levels.push_back(n_override);
        const ConvergenceTable table = run_convergence_study(rt.mc, cv.mesh_levels, cv.n_levels,
                                                             sc.scheme, cv.reference_n);

        std::ostringstream os;
        os << "kind\tnx\tn\terr_p\terr_c\terr_theta\terr_r\n";
        for (const ConvergenceRow& r : table.rows)
            os << "exact\t" << r.nx << "\t" << r.n << "\t" << fmt(r.err_p) << "\t" << fmt(r.err_c)
               << "\t" << fmt(r.err_th) << "\t" << fmt(r.err_r) << "\n";
        for (const ConvergenceRow& r : table.rows_vs_ref)
            os << "vs_ref\t" << r.nx << "\t" << r.n << "\t" << fmt(r.err_p) << "\t"
               << fmt(r.err_c) << "\t" << fmt(r.err_th) << "\t" << fmt(r.err_r) << "\n";
        for (size_t i = 0; i < table.order_p.size(); ++i)
            os << "order\t" << table.rows_vs_ref[i].nx << "\t" << table.rows_vs_ref[i + 1].n
               << "\t" << fmt(table.order_p[i]) << "\t" << fmt(table.order_c[i]) << "\t"
               << fmt(table.order_th[i]) << "\t" << fmt(std::nan("")) << "\n";
        ensure_dir(out_dir);
        write_text_file(join_path(out_dir, sc.name + ".convergence.tsv"), os.str());
        std::cout << os.str();

        // Exactly reproduced cases (rounding-level errors throughout) pass
        // without a measurable order.
        double max_err = 0.0;
        for (const ConvergenceRow& r : table.rows)
            max_err = std::max({max_err, r.err_p, r.err_c, r.err_th, r.err_r});
        if (max_err < 1e-9) {
            std::cout << "PASS exact-reproduction: max error " << fmt(max_err) << "\n";
            return 0;
        }
        const bool ok = !std::isnan(table.finest_pair_order) && table.finest_pair_order >= 0.8;
        std::cout << (ok ? "PASS" : "FAIL") << " temporal order on finest pair: "
                  << fmt(table.finest_pair_order) << "\n";
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cli_audit(const std::string& trajectory_path, const std::string& scenario_path,
              const std::string& out_dir) {
    try {
        const Scenario sc = load_scenario(locate_scenario(scenario_path));
        ScenarioRuntime rt = instantiate_scenario(sc);
        FileTrajectory traj(trajectory_path);
        if (traj.num_nodes() != rt.mesh.num_nodes()) {
            std::cerr << "error: trajectory has " << traj.num_nodes()
                      << " nodes but the scenario mesh has " << rt.mesh.num_nodes() << "\n";
            return 2;
        }
        double area = 0.0;
        for (double a : rt.mesh.tri_area) area += std::abs(a);
        const auto [bound, ell_used] =
            resolve_pressure_bound(rt.model, area, sc.scheme, rt.init.p1);
        const DiagnosticsReport rep = run_diagnostics(traj, rt.mesh, rt.model, sc.diagnostics,
                                                      bound, ell_used, rt.sources());
        const std::string summary = report_summary(rep);
        ensure_dir(out_dir);
        write_text_file(join_path(out_dir, sc.name + ".report.json"),
                        report_to_json(rep, sc.name, traj.num_levels(), traj.step_size(),
                                       ell_used, bound));
        write_text_file(join_path(out_dir, sc.name + ".report.txt"), summary);
        std::cout << summary;
        return rep.all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cli_validate_model(const std::string& scenario_path) {
    try {
        const Scenario sc = load_scenario(locate_scenario(scenario_path));
        instantiate_scenario(sc);  // throws with the violated assumption
        std::cout << "PASS model, mesh, and initial data validation\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cli_mesh_info(const std::string& scenario_path) {
    try {
        const Scenario sc = load_scenario(locate_scenario(scenario_path));
        const Mesh mesh = build_structured_mesh(sc.mesh.nx, sc.mesh.ny, sc.mesh.lx, sc.mesh.ly,
                                                sc.mesh.boundary);
        const auto issues = validate_mesh(mesh);
        double area = 0.0, min_a = 1e300, max_a = 0.0;
        for (double a : mesh.tri_area) {
            area += std::abs(a);
            min_a = std::min(min_a, std::abs(a));
            max_a = std::max(max_a, std::abs(a));
        }
        std::cout << "nodes " << mesh.num_nodes() << "\ntriangles " << mesh.num_triangles()
                  << "\ninterior_dofs " << mesh.num_interior_dofs() << "\ndirichlet_nodes "
                  << mesh.dirichlet_nodes.size() << "\nboundary_edges "
                  << mesh.boundary_edges.size() << "\narea " << fmt(area) << "\nmin_tri_area "
                  << fmt(min_a) << "\nmax_tri_area " << fmt(max_a) << "\n";
        for (const std::string& s : issues) std::cout << "INVALID " << s << "\n";
        return issues.empty() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace poromem
