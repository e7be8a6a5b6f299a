// io.cpp - raster files, color model lifts and frame export.

#include "mvmorph/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <png.h>

#include "mvmorph/errors.hpp"

namespace mvmorph {

namespace fs = std::filesystem;

namespace {

constexpr double pi = 3.14159265358979323846;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

// Little-endian encoding independent of the host byte order.
template <class U> void put_le(std::ostream &os, U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char *>(b), sizeof(U));
}

template <class U> U get_le(const unsigned char *b) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
    return v;
}

std::vector<unsigned char> slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

// Netpbm P2/P3/P5/P6 with maxval up to 65535.
Raster read_pnm(const fs::path &path, const std::vector<unsigned char> &bytes) {
    std::size_t pos = 2;
    auto fail = [&](const std::string &why) -> ParseError { return ParseError(path.string() + ": " + why); };
    auto token = [&]() -> long {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw fail("malformed netpbm header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
        return v;
    };
    const char kind = static_cast<char>(bytes[1]);
    const bool ascii = kind == '2' || kind == '3';
    const int channels = (kind == '3' || kind == '6') ? 3 : 1;
    Raster r;
    r.n2 = static_cast<int>(token());
    r.n1 = static_cast<int>(token());
    const long maxval = token();
    if (r.n1 <= 0 || r.n2 <= 0 || maxval <= 0 || maxval > 65535) throw fail("bad netpbm dimensions or maxval");
    r.channels = channels;
    const std::size_t count = static_cast<std::size_t>(r.n1) * r.n2 * channels;
    r.data.resize(count);
    if (ascii) {
        for (std::size_t k = 0; k < count; ++k) r.data[k] = static_cast<double>(token()) / maxval;
        return r;
    }
    ++pos; // single whitespace after maxval
    const std::size_t width = maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + count * width) throw fail("truncated netpbm payload");
    for (std::size_t k = 0; k < count; ++k) {
        const unsigned v = width == 2 ? (bytes[pos + 2 * k] << 8) | bytes[pos + 2 * k + 1] : bytes[pos + k];
        r.data[k] = static_cast<double>(v) / maxval;
    }
    return r;
}

Raster read_png(const fs::path &path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw ParseError(path.string() + ": " + image.message);
    }
    const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw ParseError(path.string() + ": " + msg);
    }
    Raster r;
    r.n1 = static_cast<int>(image.height);
    r.n2 = static_cast<int>(image.width);
    r.channels = gray ? 1 : 3;
    r.data.resize(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) r.data[k] = buf[k] / 255.0;
    return r;
}

Vec rgb_at(const Raster &r, int i, int j) {
    Vec c(3);
    for (int k = 0; k < 3; ++k) c[k] = r.at(i, j, r.channels == 3 ? k : 0);
    return c;
}

void check_finite(const Raster &r, const fs::path &path) {
    for (std::size_t k = 0; k < r.data.size(); ++k)
        if (!std::isfinite(r.data[k])) throw ParseError(path.string() + ": non-finite sample at index " + std::to_string(k));
}

// Principal eigenvector orientation as a color: hue from the in-plane angle
// for SPD(2), absolute eigenvector components for SPD(3).
Vec glyph_color(const Eigen::MatrixXd &A, const Eigen::VectorXd &principal) {
    if (A.rows() == 2) {
        const double angle = std::atan2(principal[1], principal[0]);
        Vec hsv(3);
        hsv << wrap_angle(2.0 * angle), 1.0, 1.0; // axis, not direction: period pi
        return hsv_to_rgb(hsv);
    }
    return principal.cwiseAbs();
}

} // namespace

ColorModel parse_color_model(const std::string &s) {
    const std::string l = lower(s);
    if (l == "gray" || l == "grey") return ColorModel::gray;
    if (l == "rgb") return ColorModel::rgb;
    if (l == "hsv") return ColorModel::hsv;
    if (l == "cb") return ColorModel::cb;
    if (l == "spd") return ColorModel::spd;
    if (l == "mvr") return ColorModel::mvr;
    throw InvalidArgument("unknown color model '" + s + "' (expected gray, rgb, hsv, cb, spd or mvr)");
}

std::string to_string(ColorModel m) {
    switch (m) {
    case ColorModel::gray: return "gray";
    case ColorModel::rgb: return "rgb";
    case ColorModel::hsv: return "hsv";
    case ColorModel::cb: return "cb";
    case ColorModel::spd: return "spd";
    case ColorModel::mvr: return "mvr";
    }
    return "?";
}

RenderMode parse_render_mode(const std::string &s) {
    const std::string l = lower(s);
    if (l == "png") return RenderMode::png;
    if (l == "mvr") return RenderMode::mvr;
    if (l == "glyph") return RenderMode::glyph;
    throw InvalidArgument("unknown render mode '" + s + "' (expected png, mvr or glyph)");
}

std::string to_string(RenderMode m) {
    switch (m) {
    case RenderMode::png: return "png";
    case RenderMode::mvr: return "mvr";
    case RenderMode::glyph: return "glyph";
    }
    return "?";
}

Raster read_raster(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char *>(magic), 8);
    in.close();
    if (png_sig_cmp(magic, 0, 8) == 0) return read_png(path);
    if (magic[0] == 'P' && magic[1] != 0 && std::strchr("2356", magic[1]) != nullptr) {
        const Raster r = read_pnm(path, slurp(path));
        check_finite(r, path);
        return r;
    }
    throw ParseError(path.string() + ": not a PNG or netpbm file");
}

void write_png(const fs::path &path, const Raster &r) {
    if (r.channels != 1 && r.channels != 3) throw InvalidArgument("write_png: need 1 or 3 channels");
    std::vector<png_byte> buf(r.data.size());
    for (std::size_t k = 0; k < buf.size(); ++k) {
        const double v = std::clamp(r.data[k], 0.0, 1.0);
        buf[k] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(r.n2);
    image.height = static_cast<png_uint_32>(r.n1);
    image.format = r.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
        throw std::runtime_error(path.string() + ": " + image.message);
    }
}

Vec rgb_to_hsv(const Vec &rgb) {
    const double r = rgb[0], g = rgb[1], b = rgb[2];
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), c = mx - mn;
    double h = 0.0;
    if (c > 0.0) {
        if (mx == r)
            h = std::fmod((g - b) / c, 6.0);
        else if (mx == g)
            h = (b - r) / c + 2.0;
        else
            h = (r - g) / c + 4.0;
    }
    Vec out(3);
    out << wrap_angle(h * pi / 3.0), mx > 0.0 ? c / mx : 0.0, mx;
    return out;
}

Vec hsv_to_rgb(const Vec &hsv) {
    double h = hsv[0] * 3.0 / pi; // sectors of 60 degrees
    h = std::fmod(h, 6.0);
    if (h < 0.0) h += 6.0;
    const double v = hsv[2], c = v * hsv[1];
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    std::array<double, 3> rgb{};
    switch (static_cast<int>(h) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
    }
    Vec out(3);
    for (int k = 0; k < 3; ++k) out[k] = rgb[k] + (v - c);
    return out;
}

Vec rgb_to_cb(const Vec &rgb) {
    const double b = rgb.head(3).norm();
    Vec out(4);
    if (b > 0.0)
        out.head(3) = rgb.head(3) / b;
    else
        out.head(3).setConstant(1.0 / std::sqrt(3.0));
    out[3] = b;
    return out;
}

Vec cb_to_rgb(const Vec &cb) { return cb.head(3) * cb[3]; }

Manifold color_manifold(ColorModel m) {
    switch (m) {
    case ColorModel::gray: return Manifold::euclidean(1);
    case ColorModel::rgb: return Manifold::euclidean(3);
    case ColorModel::hsv: return Manifold::hsv();
    case ColorModel::cb: return Manifold::cb();
    default: throw InvalidArgument("color_manifold: " + to_string(m) + " images are read from MVR1 files");
    }
}

MvImage lift(const Raster &r, ColorModel m) {
    MvImage img(color_manifold(m), r.n1, r.n2);
    for (int i = 0; i < r.n1; ++i)
        for (int j = 0; j < r.n2; ++j) {
            if (m == ColorModel::gray) {
                // Luma for color input, the sample itself for gray input.
                const double g = r.channels == 1 ? r.at(i, j, 0)
                                                 : 0.299 * r.at(i, j, 0) + 0.587 * r.at(i, j, 1) + 0.114 * r.at(i, j, 2);
                img.pixel(i, j)[0] = g;
                continue;
            }
            const Vec rgb = rgb_at(r, i, j);
            switch (m) {
            case ColorModel::rgb: img.set(i, j, rgb); break;
            case ColorModel::hsv: img.set(i, j, rgb_to_hsv(rgb)); break;
            case ColorModel::cb: img.set(i, j, rgb_to_cb(rgb)); break;
            default: break;
            }
        }
    return img;
}

Raster unlift(const MvImage &img, ColorModel m) {
    if (img.manifold() != color_manifold(m)) {
        throw InvalidArgument("unlift: image on " + img.manifold().name() + " does not match color model " + to_string(m));
    }
    Raster r;
    r.n1 = img.n1();
    r.n2 = img.n2();
    r.channels = m == ColorModel::gray ? 1 : 3;
    r.data.resize(static_cast<std::size_t>(r.n1) * r.n2 * r.channels);
    for (int i = 0; i < r.n1; ++i)
        for (int j = 0; j < r.n2; ++j) {
            const Vec p = img.pixel(i, j);
            Vec rgb;
            switch (m) {
            case ColorModel::gray: r.at(i, j, 0) = p[0]; continue;
            case ColorModel::rgb: rgb = p; break;
            case ColorModel::hsv: rgb = hsv_to_rgb(p); break;
            case ColorModel::cb: rgb = cb_to_rgb(p); break;
            default: break;
            }
            for (int k = 0; k < 3; ++k) r.at(i, j, k) = rgb[k];
        }
    return r;
}

std::uint16_t manifold_code(const Manifold &m) {
    switch (m.kind()) {
    case Manifold::Kind::euclidean: return 0;
    case Manifold::Kind::circle: return 1;
    case Manifold::Kind::sphere: return 2;
    case Manifold::Kind::spd: return 3;
    case Manifold::Kind::product:
        if (m == Manifold::hsv()) return 4;
        if (m == Manifold::cb()) return 5;
        break;
    }
    throw InvalidArgument("manifold " + m.name() + " has no MVR1 code");
}

Manifold manifold_from_code(std::uint16_t code, std::uint32_t dof) {
    auto bad = [&]() { return ParseError("manifold code " + std::to_string(code) + " does not admit dof " + std::to_string(dof)); };
    switch (code) {
    case 0:
        if (dof < 1) throw bad();
        return Manifold::euclidean(static_cast<int>(dof));
    case 1:
        if (dof != 1) throw bad();
        return Manifold::circle();
    case 2:
        if (dof < 2) throw bad();
        return Manifold::sphere(static_cast<int>(dof) - 1);
    case 3: {
        const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dof))));
        if (n < 1 || static_cast<std::uint32_t>(n * n) != dof) throw bad();
        return Manifold::spd(n);
    }
    case 4:
        if (dof != 3) throw bad();
        return Manifold::hsv();
    case 5:
        if (dof != 4) throw bad();
        return Manifold::cb();
    default: throw ParseError("unknown manifold code " + std::to_string(code));
    }
}

void write_mvr(const fs::path &path, const MvImage &img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error(path.string() + ": cannot open for writing");
    os.write("MVR1", 4);
    put_le<std::uint16_t>(os, 1);
    put_le<std::uint16_t>(os, manifold_code(img.manifold()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(img.n1()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(img.n2()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(img.dof()));
    for (double v : img.data()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put_le<std::uint64_t>(os, bits);
    }
    if (!os) throw std::runtime_error(path.string() + ": write failed");
}

MvImage read_mvr(const fs::path &path) {
    const std::vector<unsigned char> b = slurp(path);
    constexpr std::size_t header = 4 + 2 + 2 + 4 + 4 + 4;
    if (b.size() < header || std::memcmp(b.data(), "MVR1", 4) != 0) {
        throw ParseError(path.string() + ": not an MVR1 file");
    }
    const auto version = get_le<std::uint16_t>(b.data() + 4);
    if (version != 1) throw ParseError(path.string() + ": unsupported MVR1 version " + std::to_string(version));
    const auto code = get_le<std::uint16_t>(b.data() + 6);
    const auto n1 = get_le<std::uint32_t>(b.data() + 8);
    const auto n2 = get_le<std::uint32_t>(b.data() + 12);
    const auto dof = get_le<std::uint32_t>(b.data() + 16);
    Manifold m = Manifold::euclidean(1);
    try {
        m = manifold_from_code(code, dof);
    } catch (const ParseError &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (n1 == 0 || n2 == 0) throw ParseError(path.string() + ": empty raster");
    const std::size_t count = static_cast<std::size_t>(n1) * n2 * dof;
    if (b.size() != header + 8 * count) {
        throw ParseError(path.string() + ": payload has " + std::to_string(b.size() - header) + " bytes, header implies " +
                         std::to_string(8 * count));
    }
    MvImage img(m, static_cast<int>(n1), static_cast<int>(n2));
    for (std::size_t k = 0; k < count; ++k) {
        const auto bits = get_le<std::uint64_t>(b.data() + header + 8 * k);
        std::memcpy(&img.data()[k], &bits, sizeof bits);
    }
    return img;
}

MvImage ingest(const fs::path &path, ColorModel model) {
    if (!fs::exists(path)) throw ParseError(path.string() + ": file does not exist");
    MvImage img;
    if (model == ColorModel::spd || model == ColorModel::mvr) {
        img = read_mvr(path);
        if (model == ColorModel::spd && img.manifold().kind() != Manifold::Kind::spd) {
            throw ParseError(path.string() + ": expected an SPD raster, found " + img.manifold().name());
        }
    } else {
        img = lift(read_raster(path), model);
    }
    try {
        img.validate(1e-8);
    } catch (const InvalidArgument &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return img;
}

Raster render_glyphs(const MvImage &img, int tile) {
    const Manifold &m = img.manifold();
    if (m.kind() != Manifold::Kind::spd || (m.parameter() != 2 && m.parameter() != 3)) {
        throw InvalidArgument("render_glyphs: need an SPD(2) or SPD(3) image, got " + m.name());
    }
    if (tile < 3) throw InvalidArgument("render_glyphs: tile must be at least 3 pixels");
    const int n = m.parameter();
    // Common scale: the largest in-plane semi-axis fills 90% of half a tile.
    double largest = 0.0;
    for (int i = 0; i < img.n1(); ++i)
        for (int j = 0; j < img.n2(); ++j) {
            const Eigen::Map<const Eigen::MatrixXd> A(img.pixel(i, j).data(), n, n);
            const Eigen::Matrix2d B = A.topLeftCorner(2, 2);
            largest = std::max(largest, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(B).eigenvalues().maxCoeff());
        }
    const double radius = 0.45 * tile;
    const double scale = largest > 0.0 ? radius / largest : 0.0;

    Raster r;
    r.n1 = img.n1() * tile;
    r.n2 = img.n2() * tile;
    r.channels = 3;
    r.data.assign(static_cast<std::size_t>(r.n1) * r.n2 * 3, 0.0);
    const double c = (tile - 1) / 2.0;
    for (int i = 0; i < img.n1(); ++i)
        for (int j = 0; j < img.n2(); ++j) {
            const Eigen::Map<const Eigen::MatrixXd> A(img.pixel(i, j).data(), n, n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
            const Vec color = glyph_color(A, es.eigenvectors().col(n - 1));
            // In-plane block; semi-axes are its eigenvalues times `scale`.
            const Eigen::Matrix2d B = A.topLeftCorner(2, 2) * scale;
            const Eigen::Matrix2d Binv = B.inverse();
            const Eigen::Matrix2d Q = Binv * Binv;
            for (int a = 0; a < tile; ++a)
                for (int b = 0; b < tile; ++b) {
                    const Eigen::Vector2d y(a - c, b - c);
                    if (y.dot(Q * y) > 1.0) continue;
                    for (int k = 0; k < 3; ++k) r.at(i * tile + a, j * tile + b, k) = color[k];
                }
        }
    return r;
}

std::vector<fs::path> export_frames(const std::vector<MvImage> &frames, const fs::path &dir, RenderMode mode,
                                    ColorModel model) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error(dir.string() + ": " + ec.message());
    const int width = std::max<int>(3, static_cast<int>(std::to_string(frames.size()).size()));
    std::vector<fs::path> out;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        std::ostringstream name;
        name << "frame_" << std::setw(width) << std::setfill('0') << k << (mode == RenderMode::mvr ? ".mvr" : ".png");
        const fs::path p = dir / name.str();
        const MvImage &f = frames[k];
        if (mode == RenderMode::mvr) {
            write_mvr(p, f);
        } else if (mode == RenderMode::glyph || f.manifold().kind() == Manifold::Kind::spd) {
            write_png(p, render_glyphs(f));
        } else {
            ColorModel cm = model;
            if (cm == ColorModel::mvr || cm == ColorModel::spd) {
                if (f.manifold() == Manifold::euclidean(1)) cm = ColorModel::gray;
                else if (f.manifold() == Manifold::euclidean(3)) cm = ColorModel::rgb;
                else if (f.manifold() == Manifold::hsv()) cm = ColorModel::hsv;
                else if (f.manifold() == Manifold::cb()) cm = ColorModel::cb;
                else throw InvalidArgument("png export has no color mapping for " + f.manifold().name() + "; use mvr");
            }
            write_png(p, unlift(f, cm));
        }
        out.push_back(p);
    }
    return out;
}

void write_energy_csv(const fs::path &path, const std::vector<EnergyRecord> &ledger) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error(path.string() + ": cannot open for writing");
    os << "level,sweep,phase,J_total,J_reg,J_data,min_det,floored\n";
    os << std::setprecision(17);
    for (const auto &r : ledger) {
        os << r.level << ',' << r.sweep << ',' << r.phase << ',' << r.total << ',' << r.regularizer << ',' << r.data
           << ',' << r.min_det << ',' << r.floored << '\n';
    }
    if (!os) throw std::runtime_error(path.string() + ": write failed");
}

} // namespace mvmorph
