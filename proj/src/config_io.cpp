#include "petto/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "petto/errors.hpp"

namespace petto {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream iss(s);
    while (std::getline(iss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "': cannot parse number '" + v + "'");
    }
}

long parse_long(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    return static_cast<long>(d);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError("config field '" + key + "': cannot parse boolean '" + v + "'");
}

std::vector<double> parse_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const std::string& item : split_list(v)) out.push_back(parse_double(key, item));
    return out;
}

BoxSpec parse_box(const std::string& key, const std::string& v) {
    const std::vector<double> nums = parse_doubles(key, v);
    if (nums.size() != 6)
        throw ConfigError("config field '" + key + "': box needs 6 numbers (x0,y0,z0,x1,y1,z1)");
    return BoxSpec{{nums[0], nums[1], nums[2]}, {nums[3], nums[4], nums[5]}};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt(v[i]);
    }
    return out;
}

std::string fmt_list(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += v[i];
    }
    return out;
}

std::string fmt_box(const BoxSpec& b) {
    return fmt(b.lo[0]) + ", " + fmt(b.lo[1]) + ", " + fmt(b.lo[2]) + ", " + fmt(b.hi[0]) +
           ", " + fmt(b.hi[1]) + ", " + fmt(b.hi[2]);
}

struct KeyValue {
    std::string key;
    std::string value;
    int line;
};

// Applies one key to the config. Section names only group keys visually;
// keys are globally unique.
void apply_key(ProblemConfig& c, const KeyValue& kv,
               std::map<std::string, std::string>& deferred) {
    const std::string& k = kv.key;
    const std::string& v = kv.value;
    if (k == "physics") {
        if (v == "heat") c.physics = PhysicsKind::Heat;
        else if (v == "elasticity") c.physics = PhysicsKind::Elasticity;
        else throw ConfigError("config field 'physics': must be 'heat' or 'elasticity'");
    } else if (k == "nx") c.nx = parse_long(k, v);
    else if (k == "ny") c.ny = parse_long(k, v);
    else if (k == "nz") c.nz = parse_long(k, v);
    else if (k == "length_x") c.lengths[0] = parse_double(k, v);
    else if (k == "length_y") c.lengths[1] = parse_double(k, v);
    else if (k == "length_z") c.lengths[2] = parse_double(k, v);
    else if (k == "dirichlet_faces") c.dirichlet_faces = split_list(v);
    else if (k == "dirichlet_value") c.dirichlet_value = parse_double(k, v);
    else if (k == "fixed_faces") c.fixed_faces = split_list(v);
    else if (k == "source") c.source = parse_double(k, v);
    else if (k == "roller_count" || k.rfind("roller_", 0) == 0 ||
             k == "load_count" || k.rfind("load_", 0) == 0) {
        deferred[k] = v; // assembled after all lines are read
    } else if (k == "properties") c.properties = parse_doubles(k, v);
    else if (k == "poisson_ratio") c.poisson_ratio = parse_double(k, v);
    else if (k == "penalty") c.penalty = parse_double(k, v);
    else if (k == "void_floor") c.void_floor = parse_double(k, v);
    else if (k == "target_fractions") c.target_fractions = parse_doubles(k, v);
    else if (k == "region_box") {
        c.region_box = parse_box(k, v);
        c.has_region = true;
    } else if (k == "region_fractions") {
        c.region_fractions = parse_doubles(k, v);
        c.has_region = !c.region_fractions.empty();
    } else if (k == "alpha_compliance") c.alpha_compliance = parse_double(k, v);
    else if (k == "alpha_volume") c.alpha_volume = parse_double(k, v);
    else if (k == "alpha_unity") c.alpha_unity = parse_double(k, v);
    else if (k == "alpha_region") c.alpha_region = parse_double(k, v);
    else if (k == "normalize_compliance") c.normalize_compliance = parse_bool(k, v);
    else if (k == "compliance_sign") c.compliance_sign = static_cast<int>(parse_long(k, v));
    else if (k == "weight_ref_nodes") c.weight_ref_nodes = parse_double(k, v);
    else if (k == "n_apt") c.n_apt = parse_long(k, v);
    else if (k == "n_pt") c.n_pt = parse_long(k, v);
    else if (k == "dt_pt") c.dt_pt = parse_double(k, v);
    else if (k == "dt_apt") c.dt_apt = parse_double(k, v);
    else if (k == "dt_ch") c.dt_ch = parse_double(k, v);
    else if (k == "dt_ch_multiplier") c.dt_ch_multiplier = parse_double(k, v);
    else if (k == "theta") c.theta = parse_double(k, v);
    else if (k == "apt_form") c.apt_form = v;
    else if (k == "ch_mobility") c.ch_mobility = parse_double(k, v);
    else if (k == "ch_gamma") c.ch_gamma = parse_double(k, v);
    else if (k == "max_loops") c.max_loops = parse_long(k, v);
    else if (k == "convergence_tol") c.convergence_tol = parse_double(k, v);
    else if (k == "convergence_window") c.convergence_window = static_cast<int>(parse_long(k, v));
    else if (k == "report_every") c.report_every = static_cast<int>(parse_long(k, v));
    else if (k == "initial_phase") c.initial_phase = parse_double(k, v);
    else if (k == "initial_state") c.initial_state = parse_double(k, v);
    else if (k == "out_dir") c.out_dir = v;
    else if (k == "precision") c.precision = v;
    else if (k == "threads") c.threads = static_cast<int>(parse_long(k, v));
    else if (k == "formats") c.formats = split_list(v);
    else
        throw ConfigError("line " + std::to_string(kv.line) + ": unknown config key '" + k +
                          "'");
}

void assemble_indexed(ProblemConfig& c, const std::map<std::string, std::string>& kv) {
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw ConfigError("config field '" + key + "': required by the declared count");
        return it->second;
    };
    if (auto it = kv.find("roller_count"); it != kv.end()) {
        const long n = parse_long("roller_count", it->second);
        c.rollers.clear();
        for (long i = 0; i < n; ++i) {
            const std::string base = "roller_" + std::to_string(i);
            RollerSpec r;
            r.box = parse_box(base + "_box", get(base + "_box"));
            r.component = component_from_name(get(base + "_component"));
            c.rollers.push_back(r);
        }
    }
    if (auto it = kv.find("load_count"); it != kv.end()) {
        const long n = parse_long("load_count", it->second);
        c.loads.clear();
        for (long i = 0; i < n; ++i) {
            const std::string base = "load_" + std::to_string(i);
            LoadSpec l;
            l.box = parse_box(base + "_box", get(base + "_box"));
            const std::vector<double> dir =
                parse_doubles(base + "_direction", get(base + "_direction"));
            if (dir.size() != 3)
                throw ConfigError("config field '" + base + "_direction': needs 3 numbers");
            l.direction = {dir[0], dir[1], dir[2]};
            l.magnitude = parse_double(base + "_magnitude", get(base + "_magnitude"));
            c.loads.push_back(l);
        }
    }
}

} // namespace

ProblemConfig parse_config(std::istream& in, const std::string& origin) {
    std::vector<KeyValue> entries;
    std::string preset_name;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (const auto hash = s.find('#'); hash != std::string::npos) s = trim(s.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            continue; // sections are documentation only
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (key == "preset") preset_name = value;
        else entries.push_back({key, value, lineno});
    }

    ProblemConfig cfg = preset_name.empty() ? ProblemConfig{} : make_preset(preset_name);
    if (preset_name.empty()) cfg.preset = "";
    std::map<std::string, std::string> deferred;
    for (const KeyValue& kv : entries) apply_key(cfg, kv, deferred);
    assemble_indexed(cfg, deferred);
    validate_config(cfg);
    return cfg;
}

ProblemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

std::string serialize_config(const ProblemConfig& c) {
    std::ostringstream out;
    if (!c.preset.empty()) out << "preset = " << c.preset << "\n\n";

    out << "[grid]\n";
    out << "nx = " << c.nx << "\n";
    out << "ny = " << c.ny << "\n";
    out << "nz = " << c.nz << "\n";
    out << "length_x = " << fmt(c.lengths[0]) << "\n";
    out << "length_y = " << fmt(c.lengths[1]) << "\n";
    out << "length_z = " << fmt(c.lengths[2]) << "\n\n";

    out << "[physics]\n";
    out << "physics = " << (c.physics == PhysicsKind::Heat ? "heat" : "elasticity") << "\n";
    out << "source = " << fmt(c.source) << "\n";
    out << "dirichlet_faces = " << fmt_list(c.dirichlet_faces) << "\n";
    out << "dirichlet_value = " << fmt(c.dirichlet_value) << "\n";
    out << "fixed_faces = " << fmt_list(c.fixed_faces) << "\n";
    out << "roller_count = " << c.rollers.size() << "\n";
    for (std::size_t i = 0; i < c.rollers.size(); ++i) {
        out << "roller_" << i << "_box = " << fmt_box(c.rollers[i].box) << "\n";
        out << "roller_" << i << "_component = " << component_name(c.rollers[i].component)
            << "\n";
    }
    out << "load_count = " << c.loads.size() << "\n";
    for (std::size_t i = 0; i < c.loads.size(); ++i) {
        out << "load_" << i << "_box = " << fmt_box(c.loads[i].box) << "\n";
        out << "load_" << i << "_direction = " << fmt(c.loads[i].direction[0]) << ", "
            << fmt(c.loads[i].direction[1]) << ", " << fmt(c.loads[i].direction[2]) << "\n";
        out << "load_" << i << "_magnitude = " << fmt(c.loads[i].magnitude) << "\n";
    }
    out << "\n[materials]\n";
    out << "properties = " << fmt_list(c.properties) << "\n";
    out << "poisson_ratio = " << fmt(c.poisson_ratio) << "\n";
    out << "penalty = " << fmt(c.penalty) << "\n";
    out << "void_floor = " << fmt(c.void_floor) << "\n";

    out << "\n[targets]\n";
    out << "target_fractions = " << fmt_list(c.target_fractions) << "\n";
    if (c.has_region) {
        out << "region_box = " << fmt_box(c.region_box) << "\n";
        out << "region_fractions = " << fmt_list(c.region_fractions) << "\n";
    }

    out << "\n[weights]\n";
    out << "alpha_compliance = " << fmt(c.alpha_compliance) << "\n";
    out << "alpha_volume = " << fmt(c.alpha_volume) << "\n";
    out << "alpha_unity = " << fmt(c.alpha_unity) << "\n";
    out << "alpha_region = " << fmt(c.alpha_region) << "\n";
    out << "normalize_compliance = " << (c.normalize_compliance ? "true" : "false") << "\n";
    out << "compliance_sign = " << c.compliance_sign << "\n";
    out << "weight_ref_nodes = " << fmt(c.weight_ref_nodes) << "\n";

    out << "\n[schedule]\n";
    out << "n_apt = " << c.n_apt << "\n";
    out << "n_pt = " << c.n_pt << "\n";
    out << "dt_pt = " << fmt(c.dt_pt) << "\n";
    out << "dt_apt = " << fmt(c.dt_apt) << "\n";
    out << "dt_ch = " << fmt(c.dt_ch) << "\n";
    out << "dt_ch_multiplier = " << fmt(c.dt_ch_multiplier) << "\n";
    out << "theta = " << fmt(c.theta) << "\n";
    out << "apt_form = " << c.apt_form << "\n";
    out << "ch_mobility = " << fmt(c.ch_mobility) << "\n";
    out << "ch_gamma = " << fmt(c.ch_gamma) << "\n";
    out << "max_loops = " << c.max_loops << "\n";
    out << "convergence_tol = " << fmt(c.convergence_tol) << "\n";
    out << "convergence_window = " << c.convergence_window << "\n";
    out << "report_every = " << c.report_every << "\n";

    out << "\n[initial]\n";
    out << "initial_phase = " << fmt(c.initial_phase) << "\n";
    out << "initial_state = " << fmt(c.initial_state) << "\n";

    out << "\n[output]\n";
    if (!c.out_dir.empty()) out << "out_dir = " << c.out_dir << "\n";
    out << "precision = " << c.precision << "\n";
    out << "threads = " << c.threads << "\n";
    out << "formats = " << fmt_list(c.formats) << "\n";
    return out.str();
}

void save_config(const ProblemConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config file '" + path + "'");
    out << serialize_config(c);
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace petto
