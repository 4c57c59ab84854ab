#include "easynet/report.hpp"

#include "easynet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

namespace easynet {

namespace {

struct Column {
    const char* title;
    double CategoryMetrics::*field;
};

const Column kColumns[] = {
    {"I-AUROC", &CategoryMetrics::i_auroc},   {"P-AUROC", &CategoryMetrics::p_auroc},
    {"AUPRO", &CategoryMetrics::aupro},       {"Image AP", &CategoryMetrics::image_ap},
    {"Pixel AP", &CategoryMetrics::pixel_ap}, {"Gate fused", &CategoryMetrics::gate_fused_fraction},
};

std::string fixed3(double v) {
    if (std::isnan(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

std::string render_category_table(const EvalReport& report) {
    if (report.per_category.empty()) throw InvalidArgument("render_category_table: empty report");
    std::vector<std::string> names;
    for (const auto& [name, m] : report.per_category) names.push_back(name);
    std::size_t name_width = 8;
    for (const auto& n : names) name_width = std::max(name_width, n.size());

    // Rank markers per column; ties share the better marker.
    std::map<std::pair<std::string, int>, char> marker;
    for (int col = 0; col < static_cast<int>(std::size(kColumns)); ++col) {
        std::set<double, std::greater<>> distinct;
        for (const auto& [name, m] : report.per_category) {
            const double v = m.*kColumns[col].field;
            if (!std::isnan(v)) distinct.insert(v);
        }
        if (report.per_category.size() < 2 || distinct.empty()) continue;
        auto it = distinct.begin();
        const double best = *it;
        const double second = distinct.size() > 1 ? *std::next(it) : best;
        for (const auto& [name, m] : report.per_category) {
            const double v = m.*kColumns[col].field;
            if (v == best) marker[{name, col}] = '*';
            else if (distinct.size() > 1 && v == second) marker[{name, col}] = '+';
        }
    }

    std::ostringstream out;
    auto cell = [&](const std::string& s) { out << ' ' << std::setw(11) << s; };
    out << std::left << std::setw(static_cast<int>(name_width)) << "Category" << std::right;
    for (const Column& c : kColumns) cell(c.title);
    out << '\n' << std::string(name_width + 12 * std::size(kColumns), '-') << '\n';
    for (const auto& [name, m] : report.per_category) {
        out << std::left << std::setw(static_cast<int>(name_width)) << name << std::right;
        for (int col = 0; col < static_cast<int>(std::size(kColumns)); ++col) {
            const auto mk = marker.find({name, col});
            cell(fixed3(m.*kColumns[col].field) + (mk != marker.end() ? std::string(1, mk->second) : " "));
        }
        out << '\n';
    }
    out << std::string(name_width + 12 * std::size(kColumns), '-') << '\n';
    out << std::left << std::setw(static_cast<int>(name_width)) << "Mean" << std::right;
    for (const Column& c : kColumns) cell(fixed3(report.mean.*c.field) + " ");
    out << '\n';
    return out.str();
}

std::string render_category_csv(const EvalReport& report) {
    if (report.per_category.empty()) throw InvalidArgument("render_category_csv: empty report");
    std::ostringstream out;
    out << std::setprecision(12) << "category";
    for (const Column& c : kColumns) out << ',' << c.title;
    out << '\n';
    auto row = [&](const std::string& name, const CategoryMetrics& m) {
        out << name;
        for (const Column& c : kColumns) out << ',' << m.*c.field;
        out << '\n';
    };
    for (const auto& [name, m] : report.per_category) row(name, m);
    row("Mean", report.mean);
    return out.str();
}

std::array<double, 3> inferno(double t) {
    static constexpr double lut[17][3] = {
        {0.0015, 0.0005, 0.0139}, {0.0423, 0.0281, 0.1411}, {0.1293, 0.0473, 0.2908}, {0.2383, 0.0366, 0.3964},
        {0.3415, 0.0623, 0.4294}, {0.4412, 0.0993, 0.4316}, {0.5409, 0.1347, 0.4151}, {0.6401, 0.1714, 0.3811},
        {0.7357, 0.2159, 0.3302}, {0.8224, 0.2752, 0.2661}, {0.8943, 0.3534, 0.1936}, {0.9470, 0.4492, 0.1153},
        {0.9784, 0.5579, 0.0349}, {0.9879, 0.6753, 0.0653}, {0.9746, 0.7977, 0.2063}, {0.9476, 0.9174, 0.4107},
        {0.9884, 0.9984, 0.6449},
    };
    if (!std::isfinite(t)) t = 0.0;
    const double x = std::clamp(t, 0.0, 1.0) * 16.0;
    const int i = std::min(static_cast<int>(x), 15);
    const double f = x - i;
    return {lut[i][0] + f * (lut[i + 1][0] - lut[i][0]), lut[i][1] + f * (lut[i + 1][1] - lut[i][1]),
            lut[i][2] + f * (lut[i + 1][2] - lut[i][2])};
}

Tensor render_heatmap_panel(const Tensor& rgb, const Tensor& probs, const Tensor& gt) {
    const int h = rgb.h();
    const int w = rgb.w();
    if (rgb.n() != 1 || rgb.c() != 3) throw InvalidArgument("render_heatmap_panel: rgb must be (1,3,H,W)");
    for (const Tensor* t : {&probs, &gt}) {
        if (t->n() != 1 || t->c() != 1 || t->h() != h || t->w() != w) {
            throw InvalidArgument("render_heatmap_panel: map " + t->shape().str() + " is not aligned with rgb " +
                                  rgb.shape().str());
        }
    }
    Tensor panel({1, 3, h, 3 * w + 2 * kPanelGap});
    const int x_overlay = w + kPanelGap;
    const int x_gt = 2 * (w + kPanelGap);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto color = inferno(probs.at(0, 0, y, x));
            const real g = std::clamp(gt.at(0, 0, y, x), real(0), real(1));
            for (int c = 0; c < 3; ++c) {
                const double v = rgb.at(0, c, y, x);
                panel.at(0, c, y, x) = static_cast<real>(v);
                panel.at(0, c, y, x_overlay + x) = static_cast<real>((1.0 - kOverlayWeight) * v + kOverlayWeight * color[c]);
                panel.at(0, c, y, x_gt + x) = g;
            }
        }
    }
    return panel;
}

std::vector<SweepPoint> sweep_points(const std::vector<std::pair<double, EvalReport>>& reports) {
    if (reports.size() < 2) throw InvalidArgument("alpha sweep needs at least two alpha values");
    std::vector<SweepPoint> points;
    for (const auto& [alpha, r] : reports) {
        if (std::isnan(alpha)) throw InvalidArgument("alpha sweep: alpha is NaN");
        points.push_back({alpha, r.mean.i_auroc, r.mean.gate_fused_fraction});
    }
    std::sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.alpha < b.alpha; });
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].alpha == points[i - 1].alpha) {
            throw InvalidArgument("alpha sweep: duplicate alpha " + std::to_string(points[i].alpha));
        }
    }
    return points;
}

namespace {

std::string alpha_text(double a) {
    if (std::isinf(a)) return a < 0 ? "-inf" : "inf";
    std::ostringstream out;
    out << std::setprecision(12) << a;
    return out.str();
}

const char* alpha_label(double a) {
    if (std::isinf(a)) return a < 0 ? "gate_open" : "gate_close";
    return "gate_control";
}

} // namespace

std::string render_alpha_sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream out;
    out << std::setprecision(12) << "alpha,mean_i_auroc,gate_fused_fraction,label\n";
    for (const SweepPoint& p : points) {
        out << alpha_text(p.alpha) << ',' << p.mean_i_auroc << ',' << p.gate_fused_fraction << ','
            << alpha_label(p.alpha) << '\n';
    }
    return out.str();
}

std::string render_alpha_sweep_svg(const std::vector<SweepPoint>& points) {
    if (points.size() < 2) throw InvalidArgument("alpha sweep plot needs at least two points");
    constexpr double W = 640, H = 400, L = 70, R = 30, T = 30, B = 70;
    // Finite alphas spread over the inner axis; infinite ones pinned to the ends.
    double lo = 0.0, hi = 0.0;
    bool any_finite = false;
    for (const SweepPoint& p : points) {
        if (std::isinf(p.alpha)) continue;
        lo = any_finite ? std::min(lo, p.alpha) : p.alpha;
        hi = any_finite ? std::max(hi, p.alpha) : p.alpha;
        any_finite = true;
    }
    if (hi == lo) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double inner_l = L + 0.12 * (W - L - R);
    const double inner_r = W - R - 0.12 * (W - L - R);
    auto px = [&](double a) {
        if (a == -INFINITY) return L;
        if (a == INFINITY) return W - R;
        return inner_l + (a - lo) / (hi - lo) * (inner_r - inner_l);
    };
    double ymin = 1.0, ymax = 0.0;
    for (const SweepPoint& p : points) {
        if (std::isnan(p.mean_i_auroc)) continue;
        ymin = std::min(ymin, p.mean_i_auroc);
        ymax = std::max(ymax, p.mean_i_auroc);
    }
    ymin = std::max(0.0, std::floor((ymin - 0.05) * 10.0) / 10.0);
    ymax = std::min(1.0, std::ceil((ymax + 0.05) * 10.0) / 10.0);
    if (ymax <= ymin) ymax = ymin + 0.1;
    auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << L - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << std::setprecision(3) << v
            << std::setprecision(2) << "</text>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">alpha</text>\n";
    out << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (T + H - B) / 2 << ")\">mean I-AUROC</text>\n";
    out << "<polyline fill=\"none\" stroke=\"#b5367a\" stroke-width=\"2\" points=\"";
    for (const SweepPoint& p : points) {
        if (!std::isnan(p.mean_i_auroc)) out << px(p.alpha) << ',' << py(p.mean_i_auroc) << ' ';
    }
    out << "\"/>\n";
    for (const SweepPoint& p : points) {
        if (std::isnan(p.mean_i_auroc)) continue;
        out << "<circle cx=\"" << px(p.alpha) << "\" cy=\"" << py(p.mean_i_auroc) << "\" r=\"4\" fill=\"#b5367a\"/>\n";
        std::string label = alpha_text(p.alpha);
        if (p.alpha == -INFINITY) label = "Gate Open";
        if (p.alpha == INFINITY) label = "Gate Close";
        out << "<text x=\"" << px(p.alpha) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << label
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace easynet
