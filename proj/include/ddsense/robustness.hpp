#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "engine.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "sequence.hpp"
#include "spectrum.hpp"

namespace ddsense {

struct ErrorModel {
    double amp_error = 0;  // relative, Omega -> Omega (1 + eps)
    double detuning = 0;   // MHz
};

inline void validate(const ErrorModel& e, double rabi) {
    if (!(std::abs(e.amp_error) <= 0.2)) throw ValidationError("amplitude error must satisfy |eps| <= 0.2");
    if (!(std::abs(e.detuning) <= rabi)) throw ValidationError("detuning must satisfy |delta| <= rabi");
}

// Scales every Rabi amplitude (boundary pulses included) at fixed duration and
// records the detuning for the engine.
inline PulseProgram perturb_program(PulseProgram p, const ErrorModel& e) {
    double rabi = 0;
    for (const auto& s : p.segments) rabi = std::max(rabi, s.rabi);
    validate(e, rabi);
    const double k = 1.0 + e.amp_error;
    if (e.amp_error != 0) {
        for (auto& s : p.segments)
            if (s.kind == SegmentKind::Pulse) s.rabi *= k;
        if (p.init_pulse) p.init_pulse->rabi *= k;
        if (p.final_pulse) p.final_pulse->rabi *= k;
    }
    p.detuning = e.detuning;
    return p;
}

// The same source with the coupling to the probe switched off.
inline SignalSource null_source(const SignalSource& src) {
    if (const auto* f = std::get_if<ACField>(&src)) {
        ACField g = *f;
        g.amplitude = 0;
        return g;
    }
    NuclearBath b = std::get<NuclearBath>(src);
    for (auto& s : b.spins) s.a_par = s.a_perp = 0;
    return b;
}

struct RobustnessScenario {
    SignalSource source;
    double tau = 0;       // fundamental resonance interval, us
    int n_blocks = 1;     // CPMG runs 8 n_blocks pulses
    double rabi = 25;
    double phi = 0;
    SimulationConfig cfg;
    ScanOptions opt;
};

// Fundamental-dip contrast: P0 without coupling minus P0 with it.
inline double fundamental_contrast(Family fam, const RobustnessScenario& sc, const ErrorModel& e) {
    const int count = fam == Family::CPMG ? 8 * sc.n_blocks : sc.n_blocks;
    const auto p = perturb_program(build_family(fam, count, sc.tau, sc.rabi, sc.phi), e);
    const double base = evaluate(p, null_source(sc.source), sc.cfg).p0;
    return base - evaluate_point(p, sc.source, sc.cfg, sc.opt).p0;
}

struct SurfacePoint {
    double eps = 0;
    double delta = 0;
    double contrast = 0;
};

inline std::vector<SurfacePoint> robustness_sweep(Family fam, const RobustnessScenario& sc,
                                                  const std::vector<double>& eps_grid,
                                                  const std::vector<double>& delta_grid) {
    if (eps_grid.empty() || delta_grid.empty()) throw ValidationError("error grids must be non-empty");
    for (double e : eps_grid)
        for (double d : delta_grid) validate(ErrorModel{e, d}, sc.rabi);
    std::vector<SurfacePoint> out(eps_grid.size() * delta_grid.size());
    parallel_for(out.size(), sc.opt.threads, [&](std::size_t i) {
        const double e = eps_grid[i / delta_grid.size()], d = delta_grid[i % delta_grid.size()];
        out[i] = {e, d, fundamental_contrast(fam, sc, {e, d})};
    });
    return out;
}

struct SurfaceRow {
    double eps = 0;
    double delta = 0;
    double xy8 = 0;
    double yy8 = 0;
    double cpmg = 0;
};

inline std::vector<SurfaceRow> robustness_surface(const RobustnessScenario& sc, const std::vector<double>& eps_grid,
                                                  const std::vector<double>& delta_grid) {
    const auto x = robustness_sweep(Family::XY8, sc, eps_grid, delta_grid);
    const auto y = robustness_sweep(Family::YY8, sc, eps_grid, delta_grid);
    const auto c = robustness_sweep(Family::CPMG, sc, eps_grid, delta_grid);
    std::vector<SurfaceRow> rows;
    for (std::size_t i = 0; i < x.size(); ++i) rows.push_back({x[i].eps, x[i].delta, x[i].contrast, y[i].contrast, c[i].contrast});
    return rows;
}

namespace csv {
inline void write_surface(std::ostream& os, const std::vector<SurfaceRow>& rows) {
    os << "eps,delta,contrast_xy8,contrast_yy8,contrast_cpmg\n";
    for (const auto& r : rows)
        os << num(r.eps) << ',' << num(r.delta) << ',' << num(r.xy8) << ',' << num(r.yy8) << ',' << num(r.cpmg) << '\n';
}
} // namespace csv

} // namespace ddsense
