// run.cpp - configuration files and the end-to-end morph run.

#include "mvmorph/run.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mvmorph/errors.hpp"

namespace mvmorph {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string k) {
    std::replace(k.begin(), k.end(), '-', '_');
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return k;
}

double to_double(const std::string &key, const std::string &v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw InvalidArgument(key + ": expected a number, got '" + v + "'");
    return d;
}

int to_int(const std::string &key, const std::string &v) {
    std::size_t used = 0;
    int i = 0;
    try {
        i = std::stoi(v, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw InvalidArgument(key + ": expected an integer, got '" + v + "'");
    return i;
}

bool to_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument(key + ": expected true or false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string &key, const std::string &v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_int(key, item));
    }
    return out;
}

} // namespace

std::map<std::string, std::string> read_key_values(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open config file");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = normalize_key(trim(line.substr(0, eq)));
        if (key.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply_setting(RunConfig &cfg, const std::string &raw_key, const std::string &value) {
    const std::string key = normalize_key(raw_key);
    MorphConfig &m = cfg.morph;
    if (key == "template") cfg.template_path = value;
    else if (key == "reference") cfg.reference_path = value;
    else if (key == "out") cfg.out = value;
    else if (key == "model") cfg.model = parse_color_model(value);
    else if (key == "render") cfg.render = parse_render_mode(value);
    else if (key == "frames") m.K = to_int(key, value);
    else if (key == "alpha") m.alpha = to_double(key, value);
    else if (key == "eta") m.eta = to_double(key, value);
    else if (key == "m") m.m = to_int(key, value);
    else if (key == "levels") m.levels = to_int(key, value);
    else if (key == "scale_factor") m.scale_factor = to_double(key, value);
    else if (key == "inserts") m.inserts = to_int_list(key, value);
    else if (key == "sweeps") m.sweeps_per_level = to_int(key, value);
    else if (key == "kernel_sigma") m.kernel_sigma = to_double(key, value);
    else if (key == "parallel") m.parallel = to_bool(key, value);
    else throw InvalidArgument("unknown setting '" + raw_key + "'");
}

RunConfig load_config(const fs::path &path) {
    RunConfig cfg;
    const auto kv = read_key_values(path);
    for (const auto &[k, v] : kv) apply_setting(cfg, k, v);
    const fs::path base = path.parent_path();
    auto resolve = [&](fs::path &p) {
        if (!p.empty() && p.is_relative()) p = base / p;
    };
    resolve(cfg.template_path);
    resolve(cfg.reference_path);
    if (kv.count("out")) resolve(cfg.out);
    return cfg;
}

std::string echo_config(const RunConfig &cfg) {
    const MorphConfig &m = cfg.morph;
    std::ostringstream os;
    os << std::setprecision(17);
    os << "template = " << cfg.template_path.string() << "\n";
    os << "reference = " << cfg.reference_path.string() << "\n";
    os << "model = " << to_string(cfg.model) << "\n";
    os << "render = " << to_string(cfg.render) << "\n";
    os << "frames = " << (m.K != 0 ? m.K : m.scheduled_K()) << "\n";
    os << "alpha = " << m.alpha << "\n";
    os << "eta = " << m.eta << "\n";
    os << "m = " << m.m << "\n";
    os << "levels = " << m.levels << "\n";
    os << "scale_factor = " << m.scale_factor << "\n";
    os << "inserts = ";
    for (std::size_t i = 0; i < m.inserts.size(); ++i) os << (i ? "," : "") << m.inserts[i];
    os << "\n";
    os << "sweeps = " << m.sweeps_per_level << "\n";
    os << "kernel_sigma = " << m.kernel_sigma << "\n";
    os << "parallel = " << (m.parallel ? "true" : "false") << "\n";
    return os.str();
}

RunOutcome run(const RunConfig &cfg, std::ostream &log) {
    RunOutcome out;
    auto usage = [&](const std::string &msg) {
        out.exit_code = exit_usage;
        out.message = msg;
        return out;
    };

    // Everything that can be checked is checked before the output directory exists.
    if (cfg.template_path.empty()) return usage("missing template image path");
    if (cfg.reference_path.empty()) return usage("missing reference image path");
    if (!fs::exists(cfg.template_path)) return usage("template image not found: " + cfg.template_path.string());
    if (!fs::exists(cfg.reference_path)) return usage("reference image not found: " + cfg.reference_path.string());
    if (cfg.out.empty()) return usage("missing output directory");
    try {
        cfg.morph.validate();
    } catch (const InvalidArgument &e) {
        return usage(e.what());
    }
    MvImage T, R;
    try {
        T = ingest(cfg.template_path, cfg.model);
        R = ingest(cfg.reference_path, cfg.model);
    } catch (const std::exception &e) {
        return usage(e.what());
    }
    if (T.manifold() != R.manifold()) {
        return usage("template is on " + T.manifold().name() + " but reference is on " + R.manifold().name());
    }
    if (!T.same_shape(R)) return usage("template and reference differ in size");
    if (cfg.render == RenderMode::glyph && T.manifold().kind() != Manifold::Kind::spd) {
        return usage("glyph rendering needs SPD images");
    }
    if (cfg.morph.levels == 0 && cfg.morph.K < 2) return usage("a single-level run needs frames >= 2");

    log << "mvmorph: " << T.n1() << "x" << T.n2() << " on " << T.manifold().name() << ", "
        << (cfg.morph.K != 0 ? cfg.morph.K : cfg.morph.scheduled_K()) << " segments, " << cfg.morph.levels
        << " levels\n";
    const auto t0 = std::chrono::steady_clock::now();
    try {
        out.state = multiscale(T, R, cfg.morph);
    } catch (const std::exception &e) {
        out.exit_code = exit_runtime;
        out.message = std::string("morph failed: ") + e.what();
        return out;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try {
        fs::create_directories(cfg.out);
        export_frames(out.state.images, cfg.out, cfg.render, cfg.model);
        write_energy_csv(cfg.out / "energies.csv", out.state.ledger);
        std::ofstream(cfg.out / "config.cfg") << echo_config(cfg);
        std::ofstream timing(cfg.out / "timing.txt");
        timing << "seconds = " << std::setprecision(6) << seconds << "\n";
    } catch (const std::exception &e) {
        out.exit_code = exit_runtime;
        out.message = e.what();
        return out;
    }
    log << "mvmorph: wrote " << out.state.images.size() << " frames to " << cfg.out.string() << " in " << seconds
        << " s\n";
    if (out.state.aborted) {
        out.exit_code = exit_runtime;
        out.message = "aborted at level " + std::to_string(out.state.level) + ": " + out.state.message;
    }
    return out;
}

} // namespace mvmorph
