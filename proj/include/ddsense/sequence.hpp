#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "spinsys.hpp"

namespace ddsense {

enum class SegmentKind { Pulse, Delay };

struct PulseSegment {
    SegmentKind kind = SegmentKind::Delay;
    double duration = 0;  // us
    double rabi = 0;      // MHz, 0 for delays
    double phase = 0;     // rad, drive axis azimuth
    bool operator==(const PulseSegment&) const = default;
};

// Init/final rotation. `phase` is the initial phase phi of the superposition
// |phi+>; the drive axis realising it sits at boundary_axis(phase).
struct BoundaryPulse {
    double angle = 0;     // nominal rotation angle, rad
    double phase = 0;
    double rabi = 0;      // MHz
    double duration = 0;  // us
    double rotation() const { return two_pi * rabi * duration; }
    bool operator==(const BoundaryPulse&) const = default;
};

struct PulseProgram {
    std::optional<BoundaryPulse> init_pulse;
    std::vector<PulseSegment> segments;
    std::optional<BoundaryPulse> final_pulse;
    double tau = 0;
    int n_pi = 0;
    double init_phase = 0;   // readout phase when no boundary pulses are present
    double detuning = 0;     // MHz, static sigma_z/2 offset (error model annotation)
    std::string label;
    bool operator==(const PulseProgram&) const = default;
};

enum class Family { XY8, YY8, CPMG };

namespace phases {
inline constexpr double x = 0.0;
inline constexpr double y = pi / 2;
inline constexpr double mx = pi;
inline constexpr double my = -pi / 2;
} // namespace phases

inline double pi_duration(double rabi) { return 0.5 / rabi; }
inline double boundary_duration(double angle, double rabi) { return angle / (two_pi * rabi); }
inline double boundary_axis(double phi) { return -phi - pi / 2; }

inline std::vector<double> block_phases(Family f) {
    using namespace phases;
    switch (f) {
    case Family::XY8: return {x, y, x, y, y, x, y, x};
    case Family::YY8: return {my, y, y, my, my, my, y, y};
    case Family::CPMG: return {y};
    }
    return {};
}

inline const char* family_name(Family f) {
    switch (f) {
    case Family::XY8: return "XY8";
    case Family::YY8: return "YY8";
    case Family::CPMG: return "CPMG";
    }
    return "?";
}

inline BoundaryPulse make_boundary(double angle, double phi, double rabi) {
    return {angle, phi, rabi, boundary_duration(angle, rabi)};
}

// Equidistant pi train: tau/2 - t_pi/2 edges, tau - t_pi between pulses.
inline PulseProgram build_train(const std::vector<double>& pulse_phases, double tau, double rabi,
                                std::optional<double> phi, std::string label) {
    if (pulse_phases.empty()) throw ValidationError("pulse count must be >= 1");
    if (!(rabi > 0)) throw ValidationError("Rabi frequency must be positive");
    const double tp = pi_duration(rabi);
    if (!(tau > tp))
        throw InfeasibleTimingError("tau = " + std::to_string(tau) + " us does not exceed t_pi = " +
                                    std::to_string(tp) + " us");
    PulseProgram p;
    p.tau = tau;
    p.n_pi = static_cast<int>(pulse_phases.size());
    p.label = std::move(label);
    const double edge = (tau - tp) / 2, inner = tau - tp;
    p.segments.reserve(2 * pulse_phases.size() + 1);
    p.segments.push_back({SegmentKind::Delay, edge, 0, 0});
    for (std::size_t k = 0; k < pulse_phases.size(); ++k) {
        p.segments.push_back({SegmentKind::Pulse, tp, rabi, pulse_phases[k]});
        p.segments.push_back({SegmentKind::Delay, k + 1 == pulse_phases.size() ? edge : inner, 0, 0});
    }
    if (phi) {
        p.init_phase = *phi;
        p.init_pulse = make_boundary(pi / 2, *phi, rabi);
        p.final_pulse = make_boundary(3 * pi / 2, *phi, rabi);
    }
    return p;
}

inline PulseProgram build_family(Family f, int count, double tau, double rabi, double init_phase) {
    if (count < 1) throw ValidationError("count must be >= 1");
    const auto block = block_phases(f);
    std::vector<double> ph;
    ph.reserve(block.size() * count);
    for (int b = 0; b < count; ++b) ph.insert(ph.end(), block.begin(), block.end());
    return build_train(ph, tau, rabi, init_phase, std::string(family_name(f)) + "-" + std::to_string(count));
}

inline PulseProgram build_xy8(int n_blocks, double tau, double rabi, double init_phase) {
    return build_family(Family::XY8, n_blocks, tau, rabi, init_phase);
}
inline PulseProgram build_yy8(int n_blocks, double tau, double rabi, double init_phase) {
    return build_family(Family::YY8, n_blocks, tau, rabi, init_phase);
}
inline PulseProgram build_cpmg(int n_pulses, double tau, double rabi, double init_phase) {
    return build_family(Family::CPMG, n_pulses, tau, rabi, init_phase);
}

// Same program up to the label.
inline bool same_timeline(PulseProgram a, PulseProgram b) {
    a.label.clear();
    b.label.clear();
    return a == b;
}

inline double train_duration(const PulseProgram& p) {
    double t = 0;
    for (const auto& s : p.segments) t += s.duration;
    return t;
}

inline double total_duration(const PulseProgram& p) {
    return (p.init_pulse ? p.init_pulse->duration : 0.0) + train_duration(p) +
           (p.final_pulse ? p.final_pulse->duration : 0.0);
}

// Pulse centres measured from the start of the pi train.
inline std::vector<double> pulse_centers(const PulseProgram& p) {
    std::vector<double> c;
    double t = 0;
    for (const auto& s : p.segments) {
        if (s.kind == SegmentKind::Pulse) c.push_back(t + s.duration / 2);
        t += s.duration;
    }
    return c;
}

enum class DiagnosticKind {
    NonPositiveDuration,
    ZeroRabi,
    PulseArea,
    NonEquidistant,
    EdgeInterval,
    CountMismatch,
    BadTau
};

struct Diagnostic {
    std::size_t index;
    DiagnosticKind kind;
    std::string message;
};

// Structural problems make a program unrunnable; the rest are layout deviations.
inline bool is_structural(DiagnosticKind k) {
    return k == DiagnosticKind::NonPositiveDuration || k == DiagnosticKind::ZeroRabi;
}

inline std::vector<Diagnostic> validate_program(const PulseProgram& p) {
    std::vector<Diagnostic> d;
    auto add = [&](std::size_t i, DiagnosticKind k, std::string msg) {
        d.push_back({i, k, std::move(msg) + " at index " + std::to_string(i)});
    };
    if (!(p.tau > 0)) add(0, DiagnosticKind::BadTau, "non-positive tau");
    for (std::size_t i = 0; i < p.segments.size(); ++i) {
        const auto& s = p.segments[i];
        if (!(s.duration > 0)) add(i, DiagnosticKind::NonPositiveDuration, "non-positive duration");
        if (s.kind == SegmentKind::Pulse) {
            if (!(s.rabi > 0))
                add(i, DiagnosticKind::ZeroRabi, "zero Rabi amplitude");
            else if (std::abs(s.rabi * s.duration - 0.5) > 1e-12)
                add(i, DiagnosticKind::PulseArea, "pulse area differs from pi");
        }
    }
    for (const auto* b : {&p.init_pulse, &p.final_pulse}) {
        if (*b && (!((*b)->rabi > 0) || !((*b)->duration > 0)))
            add(0, DiagnosticKind::ZeroRabi, "boundary pulse with zero Rabi amplitude or duration");
    }
    const auto c = pulse_centers(p);
    if (static_cast<int>(c.size()) != p.n_pi)
        add(0, DiagnosticKind::CountMismatch, "pi count " + std::to_string(c.size()) + " differs from n_pi");
    if (!c.empty() && p.tau > 0) {
        if (std::abs(c.front() - p.tau / 2) > 1e-12) add(0, DiagnosticKind::EdgeInterval, "first centre not at tau/2");
        const double end = train_duration(p);
        if (std::abs(end - c.back() - p.tau / 2) > 1e-12)
            add(c.size() - 1, DiagnosticKind::EdgeInterval, "last free interval differs from tau/2");
        for (std::size_t k = 1; k < c.size(); ++k)
            if (std::abs(c[k] - c[k - 1] - p.tau) > 1e-12)
                add(k, DiagnosticKind::NonEquidistant, "non-equidistant centers");
    }
    return d;
}

namespace detail {
inline std::string format_phase(double ph) {
    if (ph == phases::x) return "x";
    if (ph == phases::y) return "y";
    if (ph == phases::mx) return "-x";
    if (ph == phases::my) return "-y";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g rad", ph);
    return buf;
}
inline std::string format_angle(double a) {
    if (a == pi) return "pi";
    if (a == pi / 2) return "pi/2";
    if (a == 3 * pi / 2) return "3pi/2";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g rad", a);
    return buf;
}
} // namespace detail

// DSL text for the program's phase structure; tau and rabi travel separately.
// The pulse list is folded into its shortest repeating block.
inline std::string serialize(const PulseProgram& p) {
    std::vector<double> ph;
    for (const auto& s : p.segments)
        if (s.kind == SegmentKind::Pulse) ph.push_back(s.phase);
    std::string out;
    if (p.init_pulse)
        out += "init " + detail::format_angle(p.init_pulse->angle) + " @ " + detail::format_phase(p.init_pulse->phase) + "\n";
    std::size_t period = ph.size();
    for (std::size_t q = 1; q <= ph.size(); ++q) {
        if (ph.size() % q) continue;
        bool ok = true;
        for (std::size_t i = q; i < ph.size() && ok; ++i) ok = ph[i] == ph[i - q];
        if (ok) {
            period = q;
            break;
        }
    }
    if (!ph.empty()) {
        out += "block [";
        for (std::size_t i = 0; i < period; ++i) out += (i ? ", pi@" : "pi@") + detail::format_phase(ph[i]);
        out += "] x " + std::to_string(ph.size() / period) + "\n";
    }
    if (p.final_pulse)
        out += "final " + detail::format_angle(p.final_pulse->angle) + " @ " + detail::format_phase(p.final_pulse->phase) + "\n";
    return out;
}

} // namespace ddsense
