#include "desmoke/rewards_quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace desmoke {
namespace {

constexpr int kBins = 256;

std::vector<double> luminance(const Image& img) {
    std::vector<double> l(img.pixel_count());
    for (std::size_t p = 0; p < l.size(); ++p)
        l[p] = 0.299 * img.data[3 * p] + 0.587 * img.data[3 * p + 1] + 0.114 * img.data[3 * p + 2];
    return l;
}

int bin_of(double v) {
    const int b = static_cast<int>(std::clamp(v, 0.0, 1.0) * kBins);
    return std::min(b, kBins - 1);
}

}  // namespace

double ceiq_proxy(const Image& img) {
    check_image(img);
    const std::vector<double> luma = luminance(img);
    const double n = static_cast<double>(luma.size());

    std::array<double, kBins> hist{};
    for (double v : luma) hist[bin_of(v)] += 1.0;

    double entropy_bits = 0.0;
    for (double cnt : hist) {
        if (cnt <= 0.0) continue;
        const double p = cnt / n;
        entropy_bits -= p * std::log2(p);
    }

    std::array<double, kBins> cdf{};
    double run = 0.0;
    for (int b = 0; b < kBins; ++b) {
        run += hist[b];
        cdf[b] = run / n;
    }
    // classic full-range equalization; the first occupied bin maps to 0, so a
    // single-bin (constant) image equalizes to all zeros
    double cdf_min = 1.0;
    for (int b = 0; b < kBins; ++b) {
        if (hist[b] > 0.0) {
            cdf_min = cdf[b];
            break;
        }
    }
    std::vector<double> eq(luma.size(), 0.0);
    if (cdf_min < 1.0) {
        for (std::size_t i = 0; i < luma.size(); ++i)
            eq[i] = (cdf[bin_of(luma[i])] - cdf_min) / (1.0 - cdf_min);
    }

    // single-window SSIM over the full image, population moments
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < luma.size(); ++i) {
        mx += luma[i];
        my += eq[i];
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < luma.size(); ++i) {
        const double dx = luma[i] - mx, dy = eq[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cov += dx * dy;
    }
    vx /= n;
    vy /= n;
    cov /= n;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const double ssim = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                        ((mx * mx + my * my + c1) * (vx + vy + c2));

    return 0.5 * ssim + 0.5 * entropy_bits / 8.0;
}

ExternalCsvScorer::ExternalCsvScorer(const std::string& csv_path) : csv_path_(csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open external score CSV: " + csv_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed external score line: " + line);
        const std::string path = line.substr(0, comma);
        if (path == "path") continue;  // optional header
        scores_.emplace_back(path, std::stod(line.substr(comma + 1)));
    }
}

double ExternalCsvScorer::score(const Image&, const std::string& source_path) const {
    if (source_path.empty())
        throw std::runtime_error("external scorer needs a source path");
    for (const auto& [p, s] : scores_)
        if (p == source_path) return s;
    throw std::runtime_error("no external score for " + source_path);
}

std::pair<double, double> ExternalCsvScorer::nominal_range() const {
    if (scores_.empty()) return {0.0, 0.0};
    auto [lo, hi] = std::minmax_element(scores_.begin(), scores_.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
    return {lo->second, hi->second};
}

QualityResult reward_quality(const Image& img, const std::string& source_path,
                             const std::vector<const QualityScorer*>& scorers,
                             const std::vector<ScorerNorm>& norms) {
    if (scorers.empty()) throw std::invalid_argument("reward_quality needs at least one scorer");
    if (!norms.empty() && norms.size() != scorers.size())
        throw std::invalid_argument("scorer/normalization count mismatch");
    QualityResult result;
    for (std::size_t i = 0; i < scorers.size(); ++i) {
        double s;
        try {
            s = scorers[i]->score(img, source_path);
        } catch (const std::exception& e) {
            throw std::runtime_error("scorer '" + scorers[i]->id() + "' failed: " + e.what());
        }
        if (!norms.empty()) s = norms[i].scale * s + norms[i].offset;
        result.breakdown.emplace_back(scorers[i]->id(), s);
        result.r_rf += s;
    }
    return result;
}

}  // namespace desmoke
