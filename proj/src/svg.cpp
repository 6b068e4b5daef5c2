#include "seqtune/svg.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace seqtune {

namespace {

constexpr double kWidth = 680.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 70.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Scale {
    double lo, hi;
    double map(double v, double pix_lo, double pix_hi) const {
        if (hi == lo) return 0.5 * (pix_lo + pix_hi);
        return pix_lo + (v - lo) / (hi - lo) * (pix_hi - pix_lo);
    }
};

Scale fit(const std::vector<double>& values) {
    double lo = values.front(), hi = values.front();
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) {  // flat series: pad so the line sits mid-plot
        lo -= 0.5;
        hi += 0.5;
    }
    return Scale{lo, hi};
}

void polyline(std::ostringstream& out, const std::vector<double>& xs,
              const std::vector<double>& ys, const Scale& sx, const Scale& sy,
              const std::string& color) {
    out << "  <polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << " ";
        out << num(sx.map(xs[i], kLeft, kWidth - kRight)) << ","
            << num(sy.map(ys[i], kHeight - kBottom, kTop));
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out << "  <circle cx=\"" << num(sx.map(xs[i], kLeft, kWidth - kRight))
            << "\" cy=\"" << num(sy.map(ys[i], kHeight - kBottom, kTop))
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
}

}  // namespace

std::string sweep_chart_svg(const std::vector<SweepRow>& rows) {
    std::vector<double> log_betas, rewards, kls;
    for (const SweepRow& r : rows) {
        log_betas.push_back(std::log10(r.beta));
        rewards.push_back(r.expected_reward);
        kls.push_back(r.kl_to_prior);
    }
    const Scale sx = fit(log_betas);
    const Scale sr = fit(rewards);
    const Scale sk = fit(kls);

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
        << "\" height=\"" << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth)
        << " " << num(kHeight) << "\">\n"
        << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "  <text x=\"" << num(kWidth / 2)
        << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
           "font-family=\"sans-serif\">posterior trade-off vs temperature</text>\n";

    // axes
    out << "  <line x1=\"" << num(kLeft) << "\" y1=\"" << num(kHeight - kBottom)
        << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
        << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
        << num(kLeft) << "\" y2=\"" << num(kHeight - kBottom)
        << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << num(kWidth - kRight) << "\" y1=\"" << num(kTop)
        << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
        << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n";

    // x ticks at each beta
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double x = sx.map(log_betas[i], kLeft, kWidth - kRight);
        out << "  <line x1=\"" << num(x) << "\" y1=\"" << num(kHeight - kBottom)
            << "\" x2=\"" << num(x) << "\" y2=\"" << num(kHeight - kBottom + 5)
            << "\" stroke=\"black\"/>\n"
            << "  <text x=\"" << num(x) << "\" y=\"" << num(kHeight - kBottom + 20)
            << "\" text-anchor=\"middle\" font-size=\"11\" "
               "font-family=\"sans-serif\">"
            << num(rows[i].beta) << "</text>\n";
    }
    out << "  <text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 12)
        << "\" text-anchor=\"middle\" font-size=\"12\" "
           "font-family=\"sans-serif\">beta (log scale)</text>\n";

    // y extents, one scale per series
    out << "  <text x=\"" << num(kLeft - 8) << "\" y=\"" << num(kTop + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#2266aa\" "
           "font-family=\"sans-serif\">"
        << num(sr.hi) << "</text>\n"
        << "  <text x=\"" << num(kLeft - 8) << "\" y=\""
        << num(kHeight - kBottom + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#2266aa\" "
           "font-family=\"sans-serif\">"
        << num(sr.lo) << "</text>\n"
        << "  <text x=\"" << num(kWidth - kRight + 8) << "\" y=\"" << num(kTop + 4)
        << "\" text-anchor=\"start\" font-size=\"11\" fill=\"#cc6611\" "
           "font-family=\"sans-serif\">"
        << num(sk.hi) << "</text>\n"
        << "  <text x=\"" << num(kWidth - kRight + 8) << "\" y=\""
        << num(kHeight - kBottom + 4)
        << "\" text-anchor=\"start\" font-size=\"11\" fill=\"#cc6611\" "
           "font-family=\"sans-serif\">"
        << num(sk.lo) << "</text>\n";

    polyline(out, log_betas, rewards, sx, sr, "#2266aa");
    polyline(out, log_betas, kls, sx, sk, "#cc6611");

    // legend
    out << "  <rect x=\"" << num(kLeft + 10) << "\" y=\"" << num(kTop + 6)
        << "\" width=\"12\" height=\"12\" fill=\"#2266aa\"/>\n"
        << "  <text x=\"" << num(kLeft + 28) << "\" y=\"" << num(kTop + 16)
        << "\" font-size=\"12\" font-family=\"sans-serif\">expected_reward</text>\n"
        << "  <rect x=\"" << num(kLeft + 10) << "\" y=\"" << num(kTop + 24)
        << "\" width=\"12\" height=\"12\" fill=\"#cc6611\"/>\n"
        << "  <text x=\"" << num(kLeft + 28) << "\" y=\"" << num(kTop + 34)
        << "\" font-size=\"12\" font-family=\"sans-serif\">kl_to_prior</text>\n"
        << "</svg>\n";
    return out.str();
}

}  // namespace seqtune
