#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mvmorph/errors.hpp"
#include "mvmorph/io.hpp"
#include "mvmorph/run.hpp"
#include "support.hpp"

using namespace mvmorph;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("mvmorph_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

} // namespace

TEST_CASE("hsv conversion of primaries") {
    const Vec red = rgb_to_hsv(v3(1, 0, 0));
    CHECK(red[0] == doctest::Approx(0.0));
    CHECK(red[1] == doctest::Approx(1.0));
    CHECK(red[2] == doctest::Approx(1.0));
    CHECK(rgb_to_hsv(v3(0, 1, 0))[0] == doctest::Approx(2 * std::numbers::pi / 3));
    CHECK(rgb_to_hsv(v3(0, 0, 1))[0] == doctest::Approx(-2 * std::numbers::pi / 3));
    CHECK(rgb_to_hsv(v3(0, 0, 0))[1] == 0.0);
    const Vec c = v3(0.2, 0.7, 0.4);
    CHECK((hsv_to_rgb(rgb_to_hsv(c)) - c).norm() <= 1e-12);
}

TEST_CASE("chromaticity-brightness conversion") {
    const Vec gray = rgb_to_cb(v3(0.5, 0.5, 0.5));
    CHECK((gray.head(3) - Vec::Constant(3, 1 / std::sqrt(3.0))).norm() <= 1e-12);
    CHECK(gray[3] == doctest::Approx(std::sqrt(3.0) * 0.5));
    const Vec black = rgb_to_cb(v3(0, 0, 0));
    CHECK((black.head(3) - Vec::Constant(3, 1 / std::sqrt(3.0))).norm() <= 1e-12);
    CHECK(black[3] == 0.0);
    const Vec c = v3(0.9, 0.1, 0.3);
    CHECK((cb_to_rgb(rgb_to_cb(c)) - c).norm() <= 1e-12);
}

TEST_CASE("8-bit rgb survives hsv lift and unlift") {
    Raster r{4, 5, 3, {}};
    r.data.resize(60);
    for (std::size_t k = 0; k < r.data.size(); ++k) r.data[k] = static_cast<double>((k * 37) % 256) / 255.0;
    for (ColorModel m : {ColorModel::hsv, ColorModel::cb, ColorModel::rgb}) {
        const Raster back = unlift(lift(r, m), m);
        for (std::size_t k = 0; k < r.data.size(); ++k)
            CHECK(std::abs(std::round(back.data[k] * 255) - std::round(r.data[k] * 255)) <= 1.0);
    }
}

TEST_CASE("MVR round trip is bit exact") {
    std::mt19937 g(71);
    const fs::path dir = scratch("mvr");
    for (const auto &m : {Manifold::euclidean(3), Manifold::circle(), Manifold::sphere(2), Manifold::spd(3),
                          Manifold::hsv(), Manifold::cb()}) {
        CAPTURE(m.name());
        const MvImage img = testing::random_image(m, 3, 4, g);
        write_mvr(dir / "a.mvr", img);
        const MvImage back = read_mvr(dir / "a.mvr");
        CHECK(back == img);
        CHECK(fs::file_size(dir / "a.mvr") == 20 + 8 * img.data().size());
    }
    {
        std::ofstream bad(dir / "bad.mvr", std::ios::binary);
        bad << "MVR2 nonsense";
    }
    CHECK_THROWS_AS(read_mvr(dir / "bad.mvr"), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("PNG write and read") {
    const fs::path dir = scratch("png");
    Raster r{3, 4, 3, {}};
    r.data.resize(36);
    for (std::size_t k = 0; k < r.data.size(); ++k) r.data[k] = static_cast<double>(k * 7) / 255.0;
    write_png(dir / "a.png", r);
    const Raster back = read_raster(dir / "a.png");
    CHECK(back.n1 == 3);
    CHECK(back.n2 == 4);
    REQUIRE(back.channels == 3);
    for (std::size_t k = 0; k < r.data.size(); ++k) CHECK(back.data[k] == doctest::Approx(r.data[k]));
    fs::remove_all(dir);
}

TEST_CASE("constant tensor field renders identical glyph tiles") {
    Vec p(4);
    p << 2.0, 0.5, 0.5, 1.0;
    const MvImage img(Manifold::spd(2), 2, 3, p);
    const Raster r = render_glyphs(img, 9);
    CHECK(r.n1 == 18);
    CHECK(r.n2 == 27);
    int lit = 0;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            for (int c = 0; c < 3; ++c) {
                const double ref = r.at(i, j, c);
                lit += ref > 0;
                for (int ti = 0; ti < 2; ++ti)
                    for (int tj = 0; tj < 3; ++tj) CHECK(r.at(ti * 9 + i, tj * 9 + j, c) == ref);
            }
    CHECK(lit > 0);
}

TEST_CASE("config files") {
    const fs::path dir = scratch("cfg");
    {
        std::ofstream f(dir / "a.cfg");
        f << "# comment\ntemplate = t.mvr\nreference=r.mvr\nmodel = spd\nscale-factor = 0.75\ninserts = 3, 2, 1\n"
             "levels = 4\nalpha = 0.005\n";
    }
    const RunConfig c = load_config(dir / "a.cfg");
    CHECK(c.template_path == dir / "t.mvr");
    CHECK(c.model == ColorModel::spd);
    CHECK(c.morph.scale_factor == 0.75);
    CHECK(c.morph.inserts == std::vector<int>{3, 2, 1});
    CHECK(c.morph.levels == 4);
    CHECK(echo_config(c).find("alpha = 0.005") != std::string::npos);
    {
        std::ofstream f(dir / "b.cfg");
        f << "alpha 0.1\n";
    }
    CHECK_THROWS_AS(read_key_values(dir / "b.cfg"), ParseError);
    RunConfig d;
    CHECK_THROWS_AS(apply_setting(d, "colour", "rgb"), InvalidArgument);
    CHECK_THROWS_AS(apply_setting(d, "alpha", "abc"), InvalidArgument);
    fs::remove_all(dir);
}

TEST_CASE("usage errors are reported before anything is written") {
    const fs::path dir = scratch("run");
    RunConfig c;
    c.template_path = dir / "missing_T.mvr";
    c.reference_path = dir / "missing_R.mvr";
    c.out = dir / "out";
    c.model = ColorModel::mvr;
    std::ostringstream log;
    const RunOutcome o = run(c, log);
    CHECK(o.exit_code == exit_usage);
    CHECK_FALSE(fs::exists(c.out));
    fs::remove_all(dir);
}

TEST_CASE("a small run writes frames, energies and config") {
    std::mt19937 g(72);
    const fs::path dir = scratch("run2");
    const MvImage T = testing::random_image(Manifold::spd(2), 8, 8, g, 0.2);
    write_mvr(dir / "T.mvr", T);
    write_mvr(dir / "R.mvr", T);
    RunConfig c;
    c.template_path = dir / "T.mvr";
    c.reference_path = dir / "R.mvr";
    c.out = dir / "out";
    c.model = ColorModel::mvr;
    c.render = RenderMode::mvr;
    c.morph.levels = 0;
    c.morph.K = 2;
    c.morph.sweeps_per_level = 1;
    std::ostringstream log;
    const RunOutcome o = run(c, log);
    CHECK(o.exit_code == exit_ok);
    for (const char *f : {"frame_000.mvr", "frame_001.mvr", "frame_002.mvr", "energies.csv", "config.cfg"})
        CHECK(fs::exists(c.out / f));
    CHECK(read_mvr(c.out / "frame_002.mvr") == T);
    fs::remove_all(dir);
}
