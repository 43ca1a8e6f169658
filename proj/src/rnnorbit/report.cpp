#include "rnnorbit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace rnnorbit {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Full-precision sidecar formatting; round-trips exactly.
std::string fmt_exact(double v) { return fmt("%.17g", v); }
std::string fmt_pct(double v) { return fmt("%.1f", v); }
// Display rounding: nearest integer, half away from zero.
std::string fmt_period(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::floor(v + 0.5)));
    return buf;
}

const PeriodStats* find_stats(const std::vector<PeriodStats>& stats,
                              const std::string& arch, std::size_t epoch) {
    for (const auto& s : stats)
        if (s.arch == arch && s.epoch == epoch) return &s;
    return nullptr;
}

std::vector<std::string> arch_order(const std::vector<PeriodStats>& stats) {
    std::vector<std::string> order;
    for (const char* a : {"vanilla", "lstm"})
        for (const auto& s : stats)
            if (s.arch == a) {
                order.emplace_back(a);
                break;
            }
    return order;
}

}  // namespace

PeriodStats aggregate(const std::vector<OrbitVerdict>& verdicts) {
    if (verdicts.empty()) throw ParamError("aggregate: empty verdict list");
    PeriodStats s;
    s.trajectory_count = verdicts.size();
    double period_sum = 0.0;
    for (const OrbitVerdict& v : verdicts) {
        if (v.periodic) {
            ++s.periodic_count;
            period_sum += static_cast<double>(v.period);
            if (v.period == 1) ++s.period_one_count;
            ++s.histogram[v.period];
        } else {
            ++s.histogram[0];
        }
    }
    if (s.periodic_count > 0)
        s.average_period = period_sum / static_cast<double>(s.periodic_count);
    s.percent_non_periodic =
        100.0 * static_cast<double>(s.trajectory_count - s.periodic_count) /
        static_cast<double>(s.trajectory_count);
    return s;
}

std::string render_table(const std::vector<PeriodStats>& stats) {
    if (stats.empty()) throw ParamError("render_table: no stats");
    for (const auto& s : stats)
        if (s.mode != stats.front().mode)
            throw ParamError("render_table: mixed modes");

    std::set<std::size_t> epoch_set;
    for (const auto& s : stats) epoch_set.insert(s.epoch);
    std::vector<std::size_t> epochs(epoch_set.begin(), epoch_set.end());

    std::ostringstream out;
    out << "arch,metric";
    for (std::size_t e : epochs) out << ",epoch" << e;
    out << "\n";
    for (const std::string& arch : arch_order(stats)) {
        out << arch << ",average_period";
        for (std::size_t e : epochs) {
            const PeriodStats* s = find_stats(stats, arch, e);
            out << "," << (s ? fmt_period(s->average_period) : "");
        }
        out << "\n" << arch << ",average_period_exact";
        for (std::size_t e : epochs) {
            const PeriodStats* s = find_stats(stats, arch, e);
            out << "," << (s ? fmt_exact(s->average_period) : "");
        }
        out << "\n" << arch << ",non_periodic_pct";
        for (std::size_t e : epochs) {
            const PeriodStats* s = find_stats(stats, arch, e);
            out << "," << (s ? fmt_pct(s->percent_non_periodic) : "");
        }
        out << "\n";
    }
    return out.str();
}

std::string render_sink_table(const std::vector<PeriodStats>& stats) {
    if (stats.empty()) throw ParamError("render_sink_table: no stats");
    for (const auto& s : stats)
        if (s.mode != MapMode::WithoutInput)
            throw ParamError("render_sink_table: expects without-input stats");

    const std::vector<std::string> archs = arch_order(stats);
    auto pick = [&](const std::string& a) -> const PeriodStats& {
        for (const auto& s : stats)
            if (s.arch == a) return s;
        throw ParamError("render_sink_table: missing arch " + a);
    };

    std::ostringstream out;
    out << "period";
    for (const auto& a : archs) out << "," << a;
    out << "\n1";
    for (const auto& a : archs) {
        const PeriodStats& s = pick(a);
        out << "," << fmt_pct(100.0 * static_cast<double>(s.period_one_count) /
                              static_cast<double>(s.trajectory_count));
    }
    out << "\n>1";
    for (const auto& a : archs) {
        const PeriodStats& s = pick(a);
        out << "," << fmt_pct(100.0 *
                              static_cast<double>(s.periodic_count - s.period_one_count) /
                              static_cast<double>(s.trajectory_count));
    }
    out << "\nnon-periodic";
    for (const auto& a : archs) out << "," << fmt_pct(pick(a).percent_non_periodic);
    out << "\n";
    return out.str();
}

std::string render_orbit_plot(const Trajectory& trajectory, const OrbitVerdict& verdict) {
    // Periodic orbits with period > 1 show the settled cycle; sinks and
    // non-periodic runs show the whole retained history.
    std::vector<Vector> pts;
    if (verdict.periodic && verdict.period > 1) {
        pts = trajectory.post_burn_in_states();
    } else {
        pts.reserve(trajectory.states.size());
        for (const auto& [step, h] : trajectory.states) pts.push_back(h);
    }
    if (pts.size() < 3)
        throw DegenerateInputError("render_orbit_plot: need at least 3 retained states");

    const auto proj = pca_2d(pts);

    double xmin = proj[0].first, xmax = xmin, ymin = proj[0].second, ymax = ymin;
    for (const auto& [x, y] : proj) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-300});
    constexpr double kSize = 600.0, kMargin = 60.0;  // 10% margins
    const double scale = (kSize - 2.0 * kMargin) / span;
    const double xoff = kMargin + (kSize - 2.0 * kMargin - (xmax - xmin) * scale) / 2.0;
    const double yoff = kMargin + (kSize - 2.0 * kMargin - (ymax - ymin) * scale) / 2.0;
    auto px = [&](double x) { return xoff + (x - xmin) * scale; };
    // SVG y grows downward.
    auto py = [&](double y) { return kSize - (yoff + (y - ymin) * scale); };

    std::string title = verdict.periodic
                            ? "period-" + std::to_string(verdict.period) + " orbit"
                            : "non-periodic orbit";

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
           "width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n"
        << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n"
        << "<title>" << title << "</title>\n"
        << "<text x=\"300\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" << title << "</text>\n"
        << "<polyline fill=\"none\" stroke=\"#4878cf\" stroke-width=\"0.8\" points=\"";
    for (std::size_t i = 0; i < proj.size(); ++i) {
        if (i) svg << " ";
        svg << fmt("%.3f", px(proj[i].first)) << "," << fmt("%.3f", py(proj[i].second));
    }
    svg << "\"/>\n";
    for (const auto& [x, y] : proj)
        svg << "<circle cx=\"" << fmt("%.3f", px(x)) << "\" cy=\"" << fmt("%.3f", py(y))
            << "\" r=\"2.2\" fill=\"#d1495b\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace rnnorbit
