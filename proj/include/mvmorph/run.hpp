// run.hpp - configuration files and the end-to-end morph run behind the CLI.
//
// A config file holds `key = value` lines; `#` starts a comment. Keys:
//   template, reference   input paths (relative to the config file)
//   model                 gray | rgb | hsv | cb | spd | mvr
//   frames                K, the number of segments (K + 1 frames)
//   alpha, eta, m         regularizer weights and derivative order
//   levels, scale_factor  pyramid depth and per-level size ratio
//   inserts               comma list of images inserted per segment, coarse first
//   sweeps                alternations per level
//   kernel_sigma          pyramid smoothing width
//   parallel              true | false
//   out                   output directory (relative to the config file)
//   render                png | mvr | glyph

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "mvmorph/io.hpp"
#include "mvmorph/morph.hpp"

namespace mvmorph {

struct RunConfig {
    std::filesystem::path template_path;
    std::filesystem::path reference_path;
    std::filesystem::path out = "mvmorph_out";
    ColorModel model = ColorModel::rgb;
    RenderMode render = RenderMode::png;
    MorphConfig morph;
};

// Key/value pairs of a config file; a repeated key keeps its last value.
// Throws ParseError with the line number on malformed lines.
std::map<std::string, std::string> read_key_values(const std::filesystem::path &path);

// Sets one key. Dashes and underscores in keys are interchangeable.
// Throws InvalidArgument on unknown keys or unparsable values.
void apply_setting(RunConfig &cfg, const std::string &key, const std::string &value);

// Reads a config file; relative paths are taken relative to its directory.
RunConfig load_config(const std::filesystem::path &path);

// Canonical `key = value` text of a resolved config.
std::string echo_config(const RunConfig &cfg);

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_usage = 2;

struct RunOutcome {
    int exit_code = exit_ok;
    std::string message;
    MorphState state;
};

// Validates the config and both inputs before anything is written, then runs
// the multiscale morph and writes frames, energies.csv, config.cfg and
// timing.txt into cfg.out. Progress goes to `log`.
RunOutcome run(const RunConfig &cfg, std::ostream &log);

} // namespace mvmorph
