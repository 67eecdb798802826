#include "tstar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tstar/errors.hpp"

namespace tstar {

double temporal_sim(double t_pred_s, double t_ref_s, double threshold_s) {
    return std::fabs(t_pred_s - t_ref_s) <= threshold_s ? 1.0 : 0.0;
}

// --------------------------------------------------------------------------

namespace {

std::vector<double> gaussian_kernel(std::int64_t window, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(window));
    const double center = static_cast<double>(window - 1) / 2.0;
    double sum = 0.0;
    for (std::int64_t i = 0; i < window; ++i) {
        const double d = static_cast<double>(i) - center;
        k[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable valid-mode convolution with a normalized 1D kernel.
std::vector<double> conv_valid(const std::vector<double>& src, std::int64_t w,
                               std::int64_t h, const std::vector<double>& kernel,
                               std::int64_t& out_w, std::int64_t& out_h) {
    const auto kw = static_cast<std::int64_t>(kernel.size());
    const std::int64_t mid_w = w - kw + 1;
    std::vector<double> mid(static_cast<std::size_t>(mid_w * h), 0.0);
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < mid_w; ++x) {
            double acc = 0.0;
            for (std::int64_t i = 0; i < kw; ++i)
                acc += kernel[static_cast<std::size_t>(i)] *
                       src[static_cast<std::size_t>(y * w + x + i)];
            mid[static_cast<std::size_t>(y * mid_w + x)] = acc;
        }
    out_w = mid_w;
    out_h = h - kw + 1;
    std::vector<double> out(static_cast<std::size_t>(out_w * out_h), 0.0);
    for (std::int64_t y = 0; y < out_h; ++y)
        for (std::int64_t x = 0; x < mid_w; ++x) {
            double acc = 0.0;
            for (std::int64_t i = 0; i < kw; ++i)
                acc += kernel[static_cast<std::size_t>(i)] *
                       mid[static_cast<std::size_t>((y + i) * mid_w + x)];
            out[static_cast<std::size_t>(y * out_w + x)] = acc;
        }
    return out;
}

} // namespace

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& p) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError("ssim operands differ in shape");
    if (a.width < p.window || a.height < p.window)
        throw DimensionError("image smaller than ssim window");

    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

    const auto n = a.pixels.size();
    std::vector<double> fa(n), fb(n), faa(n), fbb(n), fab(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double va = a.pixels[i];
        const double vb = b.pixels[i];
        fa[i] = va;
        fb[i] = vb;
        faa[i] = va * va;
        fbb[i] = vb * vb;
        fab[i] = va * vb;
    }

    const std::vector<double> kernel = gaussian_kernel(p.window, p.gaussian_sigma);
    std::int64_t ow = 0, oh = 0;
    const auto mu_a = conv_valid(fa, a.width, a.height, kernel, ow, oh);
    const auto mu_b = conv_valid(fb, a.width, a.height, kernel, ow, oh);
    const auto m_aa = conv_valid(faa, a.width, a.height, kernel, ow, oh);
    const auto m_bb = conv_valid(fbb, a.width, a.height, kernel, ow, oh);
    const auto m_ab = conv_valid(fab, a.width, a.height, kernel, ow, oh);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double var_a = m_aa[i] - ma * ma;
        const double var_b = m_bb[i] - mb * mb;
        const double cov = m_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

double embedding_sim(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw DimensionError("empty embedding");
    if (a.size() != b.size()) throw DimensionError("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) throw ZeroVectorError("zero-norm embedding");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// --------------------------------------------------------------------------

MetricReport set_metric(std::size_t predicted_count, std::size_t reference_count,
                        const SimFn& sim) {
    if (predicted_count == 0) throw EmptySetError("empty prediction set");
    if (reference_count == 0) throw EmptySetError("empty reference set");

    MetricReport rep;
    rep.predicted_count = static_cast<std::int64_t>(predicted_count);
    rep.reference_count = static_cast<std::int64_t>(reference_count);

    double p_sum = 0.0;
    for (std::size_t i = 0; i < predicted_count; ++i) {
        double best = 0.0;
        for (std::size_t j = 0; j < reference_count; ++j)
            best = std::max(best, sim(i, j));
        p_sum += std::max(best, 0.0);
    }
    double r_sum = 0.0;
    for (std::size_t j = 0; j < reference_count; ++j) {
        double best = 0.0;
        for (std::size_t i = 0; i < predicted_count; ++i)
            best = std::max(best, sim(i, j));
        r_sum += std::max(best, 0.0);
    }
    rep.precision = p_sum / static_cast<double>(predicted_count);
    rep.recall = r_sum / static_cast<double>(reference_count);
    rep.f1 = f1_score(rep.precision, rep.recall);
    return rep;
}

double f1_score(double precision, double recall) {
    const double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

MetricReport aggregate(const std::vector<MetricReport>& reports) {
    MetricReport agg;
    if (reports.empty()) return agg;
    for (const auto& r : reports) {
        agg.precision += r.precision;
        agg.recall += r.recall;
        agg.f1 += r.f1;
        agg.predicted_count += r.predicted_count;
        agg.reference_count += r.reference_count;
    }
    const auto n = static_cast<double>(reports.size());
    agg.precision /= n;
    agg.recall /= n;
    agg.f1 /= n;
    return agg;
}

// --------------------------------------------------------------------------

SimilaritySpec::Kind parse_metric_kind(const std::string& name) {
    if (name == "temporal") return SimilaritySpec::Kind::temporal;
    if (name == "visual") return SimilaritySpec::Kind::visual;
    if (name == "embedding") return SimilaritySpec::Kind::embedding;
    throw ConfigError("unknown metric: " + name);
}

MetricReport evaluate_instance(const KeyframeSet& predicted,
                               const std::vector<RefKeyframe>& references,
                               const SimilaritySpec& spec, const VideoSource& video) {
    const std::size_t m = predicted.entries.size();
    const std::size_t n = references.size();

    switch (spec.kind) {
        case SimilaritySpec::Kind::temporal:
            return set_metric(m, n, [&](std::size_t i, std::size_t j) {
                return temporal_sim(predicted.entries[i].timestamp,
                                    references[j].timestamp, spec.temporal_threshold_s);
            });
        case SimilaritySpec::Kind::visual: {
            if (video.frame_store.empty())
                throw ConfigError("visual metric needs a frame store");
            if (m == 0) throw EmptySetError("empty prediction set");
            if (n == 0) throw EmptySetError("empty reference set");
            std::vector<GrayImage> pred_imgs, ref_imgs;
            pred_imgs.reserve(m);
            ref_imgs.reserve(n);
            for (const auto& kf : predicted.entries)
                pred_imgs.push_back(read_pgm(frame_image_path(video.frame_store, kf.index)));
            for (const auto& ref : references)
                ref_imgs.push_back(read_pgm(frame_image_path(video.frame_store, ref.index)));
            return set_metric(m, n, [&](std::size_t i, std::size_t j) {
                return ssim(pred_imgs[i], ref_imgs[j], spec.ssim_params);
            });
        }
        case SimilaritySpec::Kind::embedding: {
            if (spec.embeddings == nullptr)
                throw ConfigError("embedding metric needs an embedding table");
            const auto& rows = *spec.embeddings;
            auto row_of = [&](FrameIndex f) -> const std::vector<double>& {
                if (f < 0 || f >= static_cast<FrameIndex>(rows.size()))
                    throw DimensionError("frame outside embedding table");
                return rows[static_cast<std::size_t>(f)];
            };
            return set_metric(m, n, [&](std::size_t i, std::size_t j) {
                return embedding_sim(row_of(predicted.entries[i].index),
                                     row_of(references[j].index));
            });
        }
    }
    throw ConfigError("unknown metric kind");
}

std::vector<std::vector<double>> load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open embeddings: " + path);
    std::size_t rows = 0, dims = 0;
    if (!(in >> rows >> dims) || dims == 0)
        throw ParseError("embeddings header must be: rows dims");
    std::vector<std::vector<double>> out(rows, std::vector<double>(dims));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t d = 0; d < dims; ++d)
            if (!(in >> out[r][d]))
                throw ParseError("embeddings truncated at row " + std::to_string(r));
    return out;
}

void save_embeddings(const std::vector<std::vector<double>>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write embeddings: " + path);
    const std::size_t dims = rows.empty() ? 0 : rows[0].size();
    out << rows.size() << ' ' << dims << '\n';
    out.precision(17);
    for (const auto& row : rows) {
        if (row.size() != dims) throw DimensionError("ragged embedding rows");
        for (std::size_t d = 0; d < dims; ++d)
            out << row[d] << (d + 1 == dims ? '\n' : ' ');
    }
}

std::string format_pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

} // namespace tstar
