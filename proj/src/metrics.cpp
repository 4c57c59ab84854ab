#include "easynet/metrics.hpp"

#include "easynet/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace easynet {

namespace {

void check_scores(std::span<const double> scores, std::span<const int> labels, const char* who) {
    if (scores.size() != labels.size()) {
        throw InvalidArgument(std::string(who) + ": " + std::to_string(scores.size()) + " scores but " +
                              std::to_string(labels.size()) + " labels");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw InvalidData(std::string(who) + ": non-finite score");
    }
    for (int l : labels) {
        if (l != 0 && l != 1) throw InvalidArgument(std::string(who) + ": labels must be 0 or 1");
    }
}

void check_maps(std::span<const Map2D> maps, std::span<const Map2D> gts, const char* who) {
    if (maps.size() != gts.size()) throw InvalidArgument(std::string(who) + ": map and gt counts differ");
    for (std::size_t i = 0; i < maps.size(); ++i) {
        if (maps[i].height != gts[i].height || maps[i].width != gts[i].width ||
            maps[i].values.size() != gts[i].values.size()) {
            throw InvalidArgument(std::string(who) + ": map " + std::to_string(i) + " is not aligned with its gt");
        }
    }
}

void flatten(std::span<const Map2D> maps, std::span<const Map2D> gts, std::vector<double>& scores,
             std::vector<int>& labels) {
    for (std::size_t i = 0; i < maps.size(); ++i) {
        scores.insert(scores.end(), maps[i].values.begin(), maps[i].values.end());
        for (double g : gts[i].values) {
            if (g != 0.0 && g != 1.0) throw InvalidArgument("gt mask is not binary");
            labels.push_back(g != 0.0 ? 1 : 0);
        }
    }
}

// Indices sorted by descending score.
std::vector<std::size_t> rank_descending(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

double box_filter_max(const Map2D& m, int k) {
    const int h = m.height;
    const int w = m.width;
    const int r = k / 2;
    auto clamp = [](int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
    std::vector<double> tmp(m.values.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -r; t <= r; ++t) s += m.at(y, clamp(x + t, w));
            tmp[static_cast<std::size_t>(y) * w + x] = s / k;
        }
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -r; t <= r; ++t) s += tmp[static_cast<std::size_t>(clamp(y + t, h)) * w + x];
            best = std::max(best, s / k);
        }
    }
    return best;
}

} // namespace

double image_score_from_map(const Map2D& probs, int smooth_kernel) {
    if (smooth_kernel < 1 || smooth_kernel % 2 == 0) {
        throw InvalidArgument("image_score_from_map: kernel must be odd and positive, got " +
                              std::to_string(smooth_kernel));
    }
    if (probs.values.empty()) throw InvalidArgument("image_score_from_map: empty map");
    return box_filter_max(probs, smooth_kernel);
}

double image_score(const Map2D& probs, const ScoreConfig& cfg) {
    if (probs.values.empty()) throw InvalidArgument("image_score: empty map");
    switch (cfg.reduction) {
    case ScoreReduction::smoothed_max:
        return image_score_from_map(probs, cfg.smooth_kernel);
    case ScoreReduction::max:
        return *std::max_element(probs.values.begin(), probs.values.end());
    case ScoreReduction::topk_mean: {
        if (!(cfg.topk_fraction > 0.0 && cfg.topk_fraction <= 1.0)) {
            throw InvalidArgument("image_score: topk_fraction must be in (0, 1]");
        }
        std::vector<double> v = probs.values;
        const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.topk_fraction * v.size())));
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(), std::greater<>());
        return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / static_cast<double>(k);
    }
    }
    throw InvalidArgument("image_score: unknown reduction");
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    check_scores(scores, labels, "auroc");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double positives = 0.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) {
                positives += 1.0;
                rank_sum += mid_rank;
            }
        }
        i = j;
    }
    const double negatives = static_cast<double>(scores.size()) - positives;
    if (positives == 0.0 || negatives == 0.0) throw DegenerateInput("auroc: labels contain a single class");
    return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double pixel_auroc(std::span<const Map2D> maps, std::span<const Map2D> gts) {
    check_maps(maps, gts, "pixel_auroc");
    std::vector<double> scores;
    std::vector<int> labels;
    flatten(maps, gts, scores, labels);
    return auroc(scores, labels);
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    check_scores(scores, labels, "average_precision");
    const auto order = rank_descending(scores);
    const double total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    if (total_pos == 0.0) throw DegenerateInput("average_precision: no positive labels");
    double ap = 0.0;
    double before = 0.0;     // items ranked ahead of the current tie group
    double pos_before = 0.0; // positives among them
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        double k = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) k += labels[order[j++]];
        const double m = static_cast<double>(j - i);
        if (k > 0.0) {
            // Positives occupy a uniformly random k-subset of the m slots.
            for (double slot = 1.0; slot <= m; slot += 1.0) {
                const double ahead = m > 1.0 ? (slot - 1.0) * (k - 1.0) / (m - 1.0) : 0.0;
                ap += (k / m) * (pos_before + 1.0 + ahead) / (before + slot);
            }
        }
        before += m;
        pos_before += k;
        i = j;
    }
    return ap / total_pos;
}

double pixel_average_precision(std::span<const Map2D> maps, std::span<const Map2D> gts) {
    check_maps(maps, gts, "pixel_average_precision");
    std::vector<double> scores;
    std::vector<int> labels;
    flatten(maps, gts, scores, labels);
    return average_precision(scores, labels);
}

std::vector<int> label_components(const Map2D& mask, int* count) {
    const int h = mask.height;
    const int w = mask.width;
    std::vector<int> labels(mask.values.size(), 0);
    std::vector<std::pair<int, int>> stack;
    int next = 0;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
            if (mask.values[i0] == 0.0 || labels[i0] != 0) continue;
            ++next;
            labels[i0] = next;
            stack.emplace_back(y0, x0);
            while (!stack.empty()) {
                const auto [y, x] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy;
                        const int xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
                        if (mask.values[j] != 0.0 && labels[j] == 0) {
                            labels[j] = next;
                            stack.emplace_back(yy, xx);
                        }
                    }
                }
            }
        }
    }
    if (count != nullptr) *count = next;
    return labels;
}

double aupro(std::span<const Map2D> maps, std::span<const Map2D> gts, double fpr_limit) {
    check_maps(maps, gts, "aupro");
    if (!(fpr_limit > 0.0 && fpr_limit <= 1.0)) throw InvalidArgument("aupro: fpr_limit must be in (0, 1]");

    // Each region pixel carries weight 1 / (|region| * regions); PRO at a
    // threshold is the summed weight of region pixels at or above it.
    std::vector<double> scores;
    std::vector<double> weight;
    std::vector<std::vector<int>> region_of(maps.size());
    std::vector<int> region_size;
    for (std::size_t m = 0; m < maps.size(); ++m) {
        int regions = 0;
        region_of[m] = label_components(gts[m], &regions);
        const int offset = static_cast<int>(region_size.size());
        region_size.resize(region_size.size() + regions, 0);
        for (int& r : region_of[m]) {
            if (r != 0) {
                r += offset;
                ++region_size[r - 1];
            }
        }
        for (double s : maps[m].values) {
            if (!std::isfinite(s)) throw InvalidData("aupro: non-finite score");
        }
    }
    const double region_count = static_cast<double>(region_size.size());
    if (region_count == 0) throw DegenerateInput("aupro: no anomalous region in any ground truth");
    double negatives = 0.0;
    for (std::size_t m = 0; m < maps.size(); ++m) {
        for (std::size_t i = 0; i < maps[m].values.size(); ++i) {
            scores.push_back(maps[m].values[i]);
            const int r = region_of[m][i];
            if (r == 0) {
                weight.push_back(-1.0);
                negatives += 1.0;
            } else {
                weight.push_back(1.0 / (region_size[r - 1] * region_count));
            }
        }
    }
    if (negatives == 0.0) throw DegenerateInput("aupro: no normal pixels");

    const auto order = rank_descending(scores);
    std::vector<double> fpr{0.0};
    std::vector<double> pro{0.0};
    double fp = 0.0;
    double overlap = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            const double wgt = weight[order[j]];
            if (wgt < 0.0) fp += 1.0; else overlap += wgt;
            ++j;
        }
        fpr.push_back(fp / negatives);
        pro.push_back(overlap);
        i = j;
    }

    double area = 0.0;
    for (std::size_t i = 1; i < fpr.size(); ++i) {
        const double x0 = fpr[i - 1];
        if (x0 >= fpr_limit) break;
        double x1 = fpr[i];
        double y1 = pro[i];
        if (x1 > fpr_limit) {
            y1 = pro[i - 1] + (pro[i] - pro[i - 1]) * (fpr_limit - x0) / (x1 - x0);
            x1 = fpr_limit;
        }
        area += 0.5 * (x1 - x0) * (pro[i - 1] + y1);
    }
    return area / fpr_limit;
}

void EvalReport::update_mean() {
    CategoryMetrics m;
    if (per_category.empty()) {
        mean = m;
        return;
    }
    for (const auto& [name, c] : per_category) {
        m.i_auroc += c.i_auroc;
        m.p_auroc += c.p_auroc;
        m.aupro += c.aupro;
        m.image_ap += c.image_ap;
        m.pixel_ap += c.pixel_ap;
        m.gate_fused_fraction += c.gate_fused_fraction;
        m.samples += c.samples;
    }
    const double n = static_cast<double>(per_category.size());
    m.i_auroc /= n;
    m.p_auroc /= n;
    m.aupro /= n;
    m.image_ap /= n;
    m.pixel_ap /= n;
    m.gate_fused_fraction /= n;
    mean = m;
}

namespace {

const char* const kMetricNames[] = {"i_auroc", "p_auroc", "aupro", "image_ap", "pixel_ap", "gate_fused_fraction"};

double* metric_field(CategoryMetrics& c, const std::string& name) {
    if (name == "i_auroc") return &c.i_auroc;
    if (name == "p_auroc") return &c.p_auroc;
    if (name == "aupro") return &c.aupro;
    if (name == "image_ap") return &c.image_ap;
    if (name == "pixel_ap") return &c.pixel_ap;
    if (name == "gate_fused_fraction") return &c.gate_fused_fraction;
    return nullptr;
}

double metric_value(const CategoryMetrics& c, const std::string& name) {
    return *metric_field(const_cast<CategoryMetrics&>(c), name);
}

void write_category(std::ostream& out, const std::string& prefix, const CategoryMetrics& c) {
    for (const char* name : kMetricNames) out << prefix << '.' << name << " = " << metric_value(c, name) << '\n';
    out << prefix << ".samples = " << c.samples << '\n';
}

} // namespace

void write_report_text(const EvalReport& report, std::ostream& out) {
    out << "# easynet evaluation report v1\n";
    out << std::setprecision(12);
    out << "fingerprint = " << report.fingerprint << '\n';
    out << "gate.mode = " << report.gate_mode << '\n';
    out << "gate.alpha = " << report.alpha << '\n';
    out << "fps = " << report.fps << '\n';
    for (const auto& [name, c] : report.per_category) write_category(out, "category." + name, c);
    write_category(out, "mean", report.mean);
}

EvalReport read_report_text(std::istream& in) {
    EvalReport r;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) {
            throw DecodeError("report line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 3);
        auto number = [&] {
            try {
                return std::stod(value);
            } catch (const std::exception&) {
                throw DecodeError("report line " + std::to_string(line_no) + ": bad number '" + value + "'");
            }
        };
        if (key == "fingerprint") {
            r.fingerprint = value;
        } else if (key == "gate.mode") {
            r.gate_mode = value;
        } else if (key == "gate.alpha") {
            r.alpha = number();
        } else if (key == "fps") {
            r.fps = number();
        } else {
            const auto dot = key.rfind('.');
            std::string owner = key.substr(0, dot);
            const std::string field = key.substr(dot + 1);
            CategoryMetrics* c = nullptr;
            if (owner == "mean") {
                c = &r.mean;
            } else if (owner.rfind("category.", 0) == 0) {
                c = &r.per_category[owner.substr(9)];
            }
            if (c == nullptr || dot == std::string::npos) {
                throw DecodeError("report line " + std::to_string(line_no) + ": unknown key " + key);
            }
            if (field == "samples") {
                c->samples = static_cast<int>(number());
            } else if (double* f = metric_field(*c, field)) {
                *f = number();
            } else {
                throw DecodeError("report line " + std::to_string(line_no) + ": unknown metric " + field);
            }
        }
    }
    return r;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
    out << std::setprecision(12) << "category";
    for (const char* name : kMetricNames) out << ',' << name;
    out << ",samples\n";
    auto row = [&](const std::string& name, const CategoryMetrics& c) {
        out << name;
        for (const char* m : kMetricNames) out << ',' << metric_value(c, m);
        out << ',' << c.samples << '\n';
    };
    for (const auto& [name, c] : report.per_category) row(name, c);
    row("mean", report.mean);
}

void write_samples_csv(const EvalReport& report, std::ostream& out) {
    out << std::setprecision(12) << "category,defect,id,label,image_score,gate,entropy_fused,entropy_rgb\n";
    for (const SampleRecord& s : report.samples) {
        out << s.category << ',' << s.defect << ',' << s.id << ',' << s.label << ',' << s.image_score << ','
            << (s.gate_fused ? "fused" : "rgb_only") << ',' << s.entropy_fused << ',' << s.entropy_rgb << '\n';
    }
}

} // namespace easynet
