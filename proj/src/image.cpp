#include "desmoke/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "desmoke/rng.hpp"

namespace desmoke {

Image::Image(int h, int w, double fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

void Image::clamp01() {
    for (auto& v : data) v = std::clamp(v, 0.0, 1.0);
}

void check_image(const Image& img) {
    if (img.height < 2 || img.width < 2)
        throw std::invalid_argument("image must be at least 2x2");
    if (img.data.size() != img.pixel_count() * 3)
        throw std::invalid_argument("image data size inconsistent with dimensions");
}

ChannelStats channel_stats(const Image& img) {
    check_image(img);
    const int h = img.height, w = img.width;
    const double n = static_cast<double>(img.pixel_count());

    ChannelStats s;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0, sum2 = 0.0, gsum = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double v = img.at(y, x, c);
                sum += v;
                sum2 += v * v;
                // forward differences with replicate boundary: the last
                // column/row difference is zero
                const double dx = (x + 1 < w) ? img.at(y, x + 1, c) - v : 0.0;
                const double dy = (y + 1 < h) ? img.at(y + 1, x, c) - v : 0.0;
                gsum += std::sqrt(dx * dx + dy * dy);
            }
        }
        const double mu = sum / n;
        s.mu[c] = mu;
        const double var = std::max(0.0, sum2 / n - mu * mu);
        s.sigma[c] = std::sqrt(var);
        s.grad[c] = gsum / n;
    }
    return s;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile of empty sample");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile fraction out of [0,100]");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    const double rank = p / 100.0 * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= n) return values[n - 1];
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double psnr(const Image& a, const Image& b) {
    check_image(a);
    check_image(b);
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("psnr: dimension mismatch");
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

void write_ppm(const Image& img, const std::string& path) {
    check_image(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> bytes(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw std::runtime_error("not a binary PPM (P6): " + path);
    auto next_token = [&in, &path]() {
        // skips whitespace and '#' comment lines
        for (;;) {
            int ch = in.peek();
            if (ch == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(ch)) {
                in.get();
            } else {
                break;
            }
            if (!in) throw std::runtime_error("truncated PPM header: " + path);
        }
        long v = 0;
        in >> v;
        if (!in) throw std::runtime_error("bad PPM header: " + path);
        return v;
    };
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    if (maxval != 255) throw std::runtime_error("unsupported PPM maxval (want 255): " + path);
    if (w < 2 || h < 2) throw std::runtime_error("PPM smaller than 2x2: " + path);
    in.get();  // single whitespace after maxval
    Image img(static_cast<int>(h), static_cast<int>(w));
    std::vector<unsigned char> bytes(img.data.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw std::runtime_error("truncated PPM payload: " + path);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.data[i] = static_cast<double>(bytes[i]) / 255.0;
    return img;
}

std::uint64_t image_hash(const Image& img) {
    std::uint64_t h = fnv1a64(&img.height, sizeof img.height);
    h = fnv1a64(&img.width, sizeof img.width, h);
    return fnv1a64(img.data.data(), img.data.size() * sizeof(double), h);
}

}  // namespace desmoke
