#pragma once
// Image carrier plus the channel statistics, percentile and fidelity metrics
// every reward path is built on.

#include <cstdint>
#include <string>
#include <vector>

namespace desmoke {

// RGB image with intensities in [0,1]. Storage is row-major, channel
// interleaved: data[(y*width + x)*3 + c].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, double fill = 0.0);

    double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

    // Clamps every intensity to [0,1] in place.
    void clamp01();
};

// Per-channel mean, population standard deviation and mean gradient
// magnitude (forward differences, replicate boundary).
struct ChannelStats {
    double mu[3] = {0, 0, 0};
    double sigma[3] = {0, 0, 0};
    double grad[3] = {0, 0, 0};
};

// Throws std::invalid_argument if the image is smaller than 2x2 or its data
// size is inconsistent with height*width*3.
void check_image(const Image& img);

ChannelStats channel_stats(const Image& img);

// Linear-interpolation percentile on the sorted sample (inclusive
// convention): rank = p/100 * (n-1). p in [0,100]; values non-empty.
double percentile(std::vector<double> values, double p);

// 10*log10(1/MSE) against peak 1.0, capped at 99 dB for identical images.
inline constexpr double kPsnrCapDb = 99.0;
double psnr(const Image& a, const Image& b);

// Binary PPM (P6, maxval 255). Intensity maps to bytes as
// round(v*255) on write and byte/255 on read.
void write_ppm(const Image& img, const std::string& path);
Image read_ppm(const std::string& path);

// Hash of dimensions plus raw intensity bytes; identifies corpus snapshots.
std::uint64_t image_hash(const Image& img);

}  // namespace desmoke
