// mvmorph - morph between two manifold-valued images.
//
//   mvmorph [config.cfg] [--template T] [--reference R] [--model spd] ...
//
// Flags override values from the config file. Exit codes: 0 success,
// 1 runtime abort, 2 usage error.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mvmorph/run.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Morph between two manifold-valued images"};
    std::string config_path;
    std::optional<std::string> tmpl, ref, model, inserts, out, render;
    std::optional<int> frames, levels, sweeps;
    std::optional<double> alpha, eta, scale;
    bool serial = false;

    app.add_option("config", config_path, "Config file with key = value lines");
    app.add_option("--template", tmpl, "Template image (PNG/PPM/PGM or MVR1)");
    app.add_option("--reference", ref, "Reference image");
    app.add_option("--model", model, "gray, rgb, hsv, cb, spd or mvr");
    app.add_option("--frames", frames, "Number of segments K (K + 1 frames)");
    app.add_option("--alpha", alpha, "Regularizer weight mu = lambda = gamma");
    app.add_option("--eta", eta, "Weight of the zero-order term");
    app.add_option("--levels", levels, "Coarsest pyramid level (0 = single level)");
    app.add_option("--scale-factor", scale, "Per-level size ratio in (0, 1)");
    app.add_option("--inserts", inserts, "Comma list of images inserted per segment, coarse first");
    app.add_option("--sweeps", sweeps, "Alternations per level");
    app.add_option("--out", out, "Output directory");
    app.add_option("--render", render, "png, mvr or glyph");
    app.add_flag("--serial", serial, "Register the pairs one after another");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return mvmorph::exit_usage;
    }

    mvmorph::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = mvmorph::load_config(config_path);
        auto set = [&](const char *key, const auto &v) {
            if (!v) return;
            std::ostringstream os;
            os.precision(17);
            os << *v;
            mvmorph::apply_setting(cfg, key, os.str());
        };
        set("template", tmpl);
        set("reference", ref);
        set("model", model);
        set("frames", frames);
        set("alpha", alpha);
        set("eta", eta);
        set("levels", levels);
        set("scale_factor", scale);
        set("inserts", inserts);
        set("sweeps", sweeps);
        set("out", out);
        set("render", render);
        if (serial) cfg.morph.parallel = false;
    } catch (const std::exception &e) {
        std::cerr << "mvmorph: " << e.what() << "\n";
        return mvmorph::exit_usage;
    }

    const mvmorph::RunOutcome res = mvmorph::run(cfg, std::cerr);
    if (res.exit_code != mvmorph::exit_ok) std::cerr << "mvmorph: " << res.message << "\n";
    return res.exit_code;
}
