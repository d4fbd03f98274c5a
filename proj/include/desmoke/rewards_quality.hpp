#pragma once
// Reference-free quality reward through a scorer plug-in interface. The
// built-in scorer is an analytic contrast/entropy proxy; learned evaluators
// plug in via precomputed sidecar scores.

#include <memory>
#include <string>
#include <vector>

#include "desmoke/image.hpp"

namespace desmoke {

class QualityScorer {
public:
    virtual ~QualityScorer() = default;
    // Higher is better. source_path identifies the image for scorers that
    // match against external records; analytic scorers ignore it.
    virtual double score(const Image& img, const std::string& source_path) const = 0;
    virtual std::string id() const = 0;
    virtual std::pair<double, double> nominal_range() const = 0;
};

// 0.5 * ssim(luma, equalized luma) + 0.5 * entropy(luma)/8.
// Luminance is 0.299R + 0.587G + 0.114B; equalization is the classic
// full-range map (cdf - cdf_min)/(1 - cdf_min) over a 256-bin histogram
// (a constant image maps to all zeros, the formula's limit); entropy uses the
// same histogram;
// SSIM is single-window over the full image with the standard constants for
// unit dynamic range.
double ceiq_proxy(const Image& img);

class CeiqProxyScorer final : public QualityScorer {
public:
    double score(const Image& img, const std::string&) const override { return ceiq_proxy(img); }
    std::string id() const override { return "ceiq-proxy"; }
    std::pair<double, double> nominal_range() const override { return {0.0, 1.0}; }
};

// Reads a `path,score` sidecar CSV; exact path matching. The slot for learned
// evaluators whose weights are not available in-process.
class ExternalCsvScorer final : public QualityScorer {
public:
    explicit ExternalCsvScorer(const std::string& csv_path);

    double score(const Image& img, const std::string& source_path) const override;
    std::string id() const override { return "external:" + csv_path_; }
    std::pair<double, double> nominal_range() const override;

private:
    std::string csv_path_;
    std::vector<std::pair<std::string, double>> scores_;
};

// Per-scorer affine normalization applied before summation; default identity.
struct ScorerNorm {
    double scale = 1.0;
    double offset = 0.0;
};

struct QualityResult {
    double r_rf = 0.0;
    std::vector<std::pair<std::string, double>> breakdown;  // (scorer id, normalized score)
};

// Sum of (possibly normalized) scorer outputs. At least one scorer required;
// a scorer failure is rethrown with the scorer id attached.
QualityResult reward_quality(const Image& img, const std::string& source_path,
                             const std::vector<const QualityScorer*>& scorers,
                             const std::vector<ScorerNorm>& norms = {});

}  // namespace desmoke
