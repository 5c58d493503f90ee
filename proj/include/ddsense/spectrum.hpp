#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "dsl.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "sequence.hpp"

namespace ddsense {

enum class Axis { Tau, Phase, Field };

struct SpectrumPoint {
    double x = 0;
    double p0 = 1;
};

struct Spectrum {
    Axis axis = Axis::Tau;
    std::vector<SpectrumPoint> points;
    std::string scenario;               // provenance
    double max_unitarity_error = 0;
};

// Fixed: use the source's theta0 as given. MaxOverGrid: worst case (lowest P0)
// over theta0 + 2 pi j / n for classical fields; no effect on baths.
enum class PhasePolicy { Fixed, MaxOverGrid };

struct ScanOptions {
    PhasePolicy policy = PhasePolicy::Fixed;
    int phase_grid = 16;
    int threads = 0;  // 0: default_threads()
};

// How to rebuild the program for each grid point.
struct SequenceRecipe {
    Family family = Family::XY8;
    int count = 1;        // blocks for XY8/YY8, pulses for CPMG
    double rabi = 25;     // MHz
    double phi = 0;
    std::optional<dsl::ProgramTemplate> dsl;

    PulseProgram build(double tau) const {
        if (dsl) return dsl::instantiate(*dsl, {tau, rabi, phi});
        return build_family(family, count, tau, rabi, phi);
    }
    std::string describe() const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s-%d rabi=%.9g MHz phi=%.9g", dsl ? "dsl" : family_name(family), count, rabi, phi);
        return buf;
    }
};

inline std::string describe(const SignalSource& src) {
    char buf[200];
    if (const auto* f = std::get_if<ACField>(&src)) {
        std::snprintf(buf, sizeof buf, "ac amp=%.9g freq=%.9g theta0=%.9g", f->amplitude, f->frequency, f->phase_offset);
        return buf;
    }
    const auto& b = std::get<NuclearBath>(src);
    std::string s;
    std::snprintf(buf, sizeof buf, "bath B=%.9g", b.field_B);
    s = buf;
    for (const auto& n : b.spins) {
        std::snprintf(buf, sizeof buf, " [%s gamma=%.9g apar=%.9g aperp=%.9g]", n.species.c_str(), n.gamma, n.a_par, n.a_perp);
        s += buf;
    }
    return s;
}

inline std::string describe(const SimulationConfig& c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s max_step=%.9g rel_tol=%.3g boundary=%s",
                  c.integrator == Integrator::Adaptive ? "adaptive" : "oracle", c.max_step, c.rel_tol,
                  c.boundary_pulses == BoundaryMode::Finite ? "finite" : "ideal");
    return buf;
}

// One point, with the signal-phase policy applied.
inline Evaluation evaluate_point(const PulseProgram& p, const SignalSource& src, const SimulationConfig& cfg,
                                 const ScanOptions& opt) {
    const auto* f = std::get_if<ACField>(&src);
    if (opt.policy == PhasePolicy::Fixed || !f || f->amplitude == 0) return evaluate(p, src, cfg);
    if (opt.phase_grid < 1) throw ValidationError("phase grid needs at least one point");
    Evaluation worst{2.0, 0.0};
    for (int j = 0; j < opt.phase_grid; ++j) {
        ACField g = *f;
        g.phase_offset += two_pi * j / opt.phase_grid;
        const auto e = evaluate(p, SignalSource{g}, cfg);
        worst.unitarity_error = std::max(worst.unitarity_error, e.unitarity_error);
        worst.p0 = std::min(worst.p0, e.p0);
    }
    return worst;
}

inline void require_increasing(const std::vector<double>& g, const char* what) {
    if (g.empty()) throw ValidationError(std::string(what) + " grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw ValidationError(std::string(what) + " grid must be strictly increasing");
}

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw ValidationError("grid needs at least one point");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return g;
}

namespace detail {
template <class Build>
Spectrum sweep(Axis axis, const std::vector<double>& grid, Build&& build, const SignalSource& src,
               const SimulationConfig& cfg, const ScanOptions& opt, const char* name) {
    std::vector<Evaluation> out(grid.size());
    parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        try {
            out[i] = evaluate_point(build(grid[i]), src, cfg, opt);
        } catch (...) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s = %.9g", name, grid[i]);
            rethrow_with_context(std::current_exception(), buf);
        }
    });
    Spectrum s;
    s.axis = axis;
    s.points.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s.points.push_back({grid[i], out[i].p0});
        s.max_unitarity_error = std::max(s.max_unitarity_error, out[i].unitarity_error);
    }
    return s;
}
} // namespace detail

inline Spectrum scan_tau(const SequenceRecipe& r, const SignalSource& src, const std::vector<double>& tau_grid,
                         const SimulationConfig& cfg, const ScanOptions& opt = {}) {
    require_increasing(tau_grid, "tau");
    r.build(tau_grid.front());  // fail fast on timing before any work
    auto s = detail::sweep(Axis::Tau, tau_grid, [&](double tau) { return r.build(tau); }, src, cfg, opt, "tau");
    s.scenario = "tau scan; " + r.describe() + "; " + describe(src) + "; " + describe(cfg);
    return s;
}

inline Spectrum scan_phase(const SequenceRecipe& r, const SignalSource& src, const std::vector<double>& phi_grid,
                           double tau, const SimulationConfig& cfg, const ScanOptions& opt = {}) {
    require_increasing(phi_grid, "phi");
    r.build(tau);
    auto s = detail::sweep(
        Axis::Phase, phi_grid,
        [&](double phi) {
            SequenceRecipe q = r;
            q.phi = phi;
            return q.build(tau);
        },
        src, cfg, opt, "phi");
    char buf[48];
    std::snprintf(buf, sizeof buf, "phase scan tau=%.9g; ", tau);
    s.scenario = buf + r.describe() + "; " + describe(src) + "; " + describe(cfg);
    return s;
}

// tau window around the first spin's Larmor resonance, relative to tau_res.
struct TauWindow {
    double lo = 0.9;
    double hi = 1.1;
    int points = 400;
};

inline double larmor_khz(double gamma, double B) { return gamma * B; }

struct FieldSpectrum {
    double B = 0;
    double tau_res = 0;
    Spectrum spectrum;
};

inline std::vector<FieldSpectrum> scan_field(const SequenceRecipe& r, const NuclearBath& bath,
                                             const std::vector<double>& B_grid, const TauWindow& w,
                                             const SimulationConfig& cfg, const ScanOptions& opt = {}) {
    if (B_grid.empty()) throw ValidationError("field grid is empty");
    validate(bath);
    if (!(w.lo > 0 && w.hi > w.lo && w.points >= 3)) throw ValidationError("invalid tau window");
    std::vector<FieldSpectrum> out;
    for (double B : B_grid) {
        if (!(B > 0)) throw ValidationError("field values must be > 0");
        NuclearBath b = bath;
        b.field_B = B;
        const double tau_res = resonance_interval(khz_to_mhz(larmor_khz(b.spins.front().gamma, B)));
        auto s = scan_tau(r, SignalSource{b}, linspace(w.lo * tau_res, w.hi * tau_res, w.points), cfg, opt);
        s.axis = Axis::Tau;
        out.push_back({B, tau_res, std::move(s)});
    }
    return out;
}

struct Peak {
    double x_center = 0;
    double depth = 0;            // prominence of the dip
    double width = 0;            // full width at half depth
    double apparent_frequency = 0;  // MHz, 1/(2 tau) on tau axes
    double p_min = 1;
};

// Local minima of P0 ranked by prominence; centres refined by a 3-point parabola.
inline std::vector<Peak> detect_peaks(const Spectrum& s, double min_depth, double min_separation = 0) {
    const auto& p = s.points;
    const std::size_t n = p.size();
    std::vector<Peak> found;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(p[i].p0 < p[i - 1].p0 && p[i].p0 <= p[i + 1].p0)) continue;
        // prominence
        double left = p[i].p0, right = p[i].p0;
        std::size_t j = i;
        while (j > 0 && p[j - 1].p0 >= p[i].p0) left = std::max(left, p[--j].p0);
        j = i;
        while (j + 1 < n && p[j + 1].p0 >= p[i].p0) right = std::max(right, p[++j].p0);
        const double depth = std::min(left, right) - p[i].p0;
        if (!(depth >= min_depth) || depth <= 0) continue;
        Peak pk;
        pk.depth = std::min(depth, 1.0);
        pk.p_min = p[i].p0;
        const double y0 = p[i - 1].p0, y1 = p[i].p0, y2 = p[i + 1].p0;
        const double den = y0 - 2 * y1 + y2;
        double off = den > 0 ? 0.5 * (y0 - y2) / den : 0.0;
        off = std::clamp(off, -0.5, 0.5);
        const double h = off < 0 ? p[i].x - p[i - 1].x : p[i + 1].x - p[i].x;
        pk.x_center = p[i].x + off * h;
        const double level = p[i].p0 + depth / 2;
        auto cross = [&](std::size_t a, std::size_t b) {
            return p[a].x + (level - p[a].p0) * (p[b].x - p[a].x) / (p[b].p0 - p[a].p0);
        };
        double xl = p.front().x, xr = p.back().x;
        for (std::size_t k = i; k > 0; --k)
            if (p[k - 1].p0 >= level) {
                xl = cross(k, k - 1);
                break;
            }
        for (std::size_t k = i; k + 1 < n; ++k)
            if (p[k + 1].p0 >= level) {
                xr = cross(k, k + 1);
                break;
            }
        pk.width = xr - xl;
        if (s.axis == Axis::Tau && pk.x_center > 0) pk.apparent_frequency = 1.0 / (2.0 * pk.x_center);
        found.push_back(pk);
    }
    std::stable_sort(found.begin(), found.end(), [](const Peak& a, const Peak& b) { return a.depth > b.depth; });
    std::vector<Peak> kept;
    for (const auto& pk : found) {
        bool clash = false;
        for (const auto& k : kept) clash = clash || std::abs(k.x_center - pk.x_center) < min_separation;
        if (!clash) kept.push_back(pk);
    }
    std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.x_center < b.x_center; });
    return kept;
}

inline double default_min_depth(double beta0) { return std::max(10 * beta0 * beta0 * beta0, 0.002); }

struct Species {
    std::string name;
    double gamma = 0;  // kHz/G
};

inline Species species(const std::string& name) { return {name, gyromagnetic(name)}; }

enum class LabelKind { Fundamental, Harmonic, Unassigned };

struct Assignment {
    std::string species;
    Rational order;
    double expected_khz = 0;
    double mismatch = 0;  // relative
    LabelKind kind() const { return order == Rational{1, 1} ? LabelKind::Fundamental : LabelKind::Harmonic; }
    std::string label() const {
        return order == Rational{1, 1} ? "Fundamental(" + species + ")" : "Harmonic(" + order.str() + "," + species + ")";
    }
};

struct ClassifiedPeak {
    Peak peak;
    std::vector<Assignment> candidates;  // best first
    LabelKind kind() const { return candidates.empty() ? LabelKind::Unassigned : candidates.front().kind(); }
    std::string label() const { return candidates.empty() ? "Unassigned" : candidates.front().label(); }
    bool ambiguous() const { return candidates.size() > 1; }
};

struct HarmonicReport {
    std::vector<ClassifiedPeak> entries;
};

// Every (species, order) within tol_rel is kept; ordering is by mismatch, with
// the lower order first when mismatches tie.
inline HarmonicReport classify_peaks(const std::vector<Peak>& peaks, const std::vector<Species>& candidates, double B,
                                     const std::vector<Rational>& orders, double tol_rel) {
    if (!(tol_rel > 0 && tol_rel <= 0.1)) throw ValidationError("tolerance must lie in (0, 0.1]");
    if (!(B > 0)) throw ValidationError("field must be > 0");
    HarmonicReport rep;
    for (const auto& pk : peaks) {
        ClassifiedPeak cp{pk, {}};
        const double f_khz = pk.apparent_frequency * 1e3;
        for (const auto& sp : candidates)
            for (const auto& k : orders) {
                const double expect = k.value() * larmor_khz(sp.gamma, B);
                const double mis = std::abs(f_khz - expect) / expect;
                if (mis <= tol_rel) cp.candidates.push_back({sp.name, k, expect, mis});
            }
        std::stable_sort(cp.candidates.begin(), cp.candidates.end(), [](const Assignment& a, const Assignment& b) {
            if (std::abs(a.mismatch - b.mismatch) > 1e-12) return a.mismatch < b.mismatch;
            return a.order.value() < b.order.value();
        });
        rep.entries.push_back(std::move(cp));
    }
    return rep;
}

struct GyroFit {
    double slope = 0;      // kHz/G
    double intercept = 0;  // kHz
    double stderr_slope = 0;
};

inline GyroFit fit_gyromagnetic(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 3) throw ValidationError("slope fit needs at least 3 points");
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (pts[i].first == pts[j].first) throw ValidationError("field values must be distinct");
    const double n = static_cast<double>(pts.size());
    double mx = 0, my = 0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    GyroFit g;
    g.slope = sxy / sxx;
    g.intercept = my - g.slope * mx;
    double ss = 0;
    for (const auto& [x, y] : pts) {
        const double r = y - g.intercept - g.slope * x;
        ss += r * r;
    }
    g.stderr_slope = std::sqrt(ss / (n - 2) / sxx);
    return g;
}

// Spectrum peak closest to tau_res, if any.
inline std::optional<Peak> nearest_peak(const std::vector<Peak>& peaks, double x) {
    std::optional<Peak> best;
    for (const auto& p : peaks)
        if (!best || std::abs(p.x_center - x) < std::abs(best->x_center - x)) best = p;
    return best;
}

struct IdentifyResult {
    std::vector<std::pair<double, double>> points;  // (B, f_peak kHz)
    std::vector<Peak> peaks;
    GyroFit fit;
};

// Deepest dip per field, apparent frequency vs B, straight-line fit.
inline IdentifyResult identify(const std::vector<FieldSpectrum>& spectra, double min_depth) {
    IdentifyResult r;
    for (const auto& fs : spectra) {
        const auto peaks = detect_peaks(fs.spectrum, min_depth);
        if (peaks.empty()) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "no resonance found at B = %.9g G", fs.B);
            throw ValidationError(buf);
        }
        const auto deepest =
            *std::max_element(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.depth < b.depth; });
        r.peaks.push_back(deepest);
        r.points.emplace_back(fs.B, deepest.apparent_frequency * 1e3);
    }
    r.fit = fit_gyromagnetic(r.points);
    return r;
}

namespace csv {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_spectrum(std::ostream& os, const Spectrum& s) {
    os << "x,P0\n";
    for (const auto& p : s.points) os << num(p.x) << ',' << num(p.p0) << '\n';
}

// One row per candidate label; unassigned peaks get a single row.
inline void write_report(std::ostream& os, const HarmonicReport& r) {
    os << "tau_center,apparent_freq_kHz,depth,width,label,mismatch\n";
    for (const auto& e : r.entries) {
        const auto head = num(e.peak.x_center) + ',' + num(e.peak.apparent_frequency * 1e3) + ',' + num(e.peak.depth) +
                          ',' + num(e.peak.width) + ',';
        if (e.candidates.empty()) os << head << "Unassigned,\n";
        for (const auto& c : e.candidates) os << head << c.label() << ',' << num(c.mismatch) << '\n';
    }
}

} // namespace csv

} // namespace ddsense
