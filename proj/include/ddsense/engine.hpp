#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "sequence.hpp"
#include "spinsys.hpp"

namespace ddsense {

// H_ac = A sin(2 pi f t + theta0) sigma_z / 2, A and f cyclic (MHz).
// t = 0 is the leading edge of the pi train.
struct ACField {
    double amplitude = 0;
    double frequency = 1;
    double phase_offset = 0;
};

struct HyperfineSpin {
    double a_par = 0;   // kHz
    double a_perp = 0;  // kHz
    double gamma = 0;   // kHz/G
    std::string species;
};

enum class BathState { MaximallyMixed };

struct NuclearBath {
    std::vector<HyperfineSpin> spins;
    double field_B = 0;  // G
    BathState initial_state = BathState::MaximallyMixed;
};

using SignalSource = std::variant<ACField, NuclearBath>;

enum class Integrator { Adaptive, FixedStepOracle };
enum class BoundaryMode { Finite, Ideal };

struct T2Envelope {
    double t2 = 0;  // us
    double exponent = 1;
};

struct SimulationConfig {
    Integrator integrator = Integrator::Adaptive;
    double max_step = 0.01;  // us
    double rel_tol = 1e-10;
    BoundaryMode boundary_pulses = BoundaryMode::Finite;
    std::optional<T2Envelope> t2_envelope;
};

inline constexpr std::size_t max_bath_spins = 6;
inline constexpr double adaptive_unitarity_tol = 1e-9;
inline constexpr double oracle_unitarity_tol = 1e-10;

struct Evaluation {
    double p0 = 1;
    double unitarity_error = 0;
};

inline void validate(const ACField& f) {
    if (!(f.amplitude >= 0)) throw ValidationError("AC amplitude must be >= 0");
    if (!(f.frequency > 0)) throw ValidationError("AC frequency must be > 0");
    if (!std::isfinite(f.phase_offset)) throw ValidationError("AC phase offset must be finite");
}

inline void validate(const NuclearBath& b) {
    if (b.spins.empty()) throw ValidationError("bath needs at least one nuclear spin");
    if (b.spins.size() > max_bath_spins)
        throw CapacityError("bath of " + std::to_string(b.spins.size()) + " spins exceeds the limit of " +
                            std::to_string(max_bath_spins));
    for (const auto& s : b.spins) {
        if (!(s.gamma > 0)) throw ValidationError("gyromagnetic ratio must be > 0");
        if (!std::isfinite(s.a_par) || !std::isfinite(s.a_perp)) throw ValidationError("hyperfine components must be finite");
    }
    if (!std::isfinite(b.field_B)) throw ValidationError("field must be finite");
}

inline void validate(const SimulationConfig& c) {
    if (!(c.max_step > 0)) throw ValidationError("max_step must be > 0");
    if (!(c.rel_tol > 0 && c.rel_tol <= 1e-3)) throw ValidationError("rel_tol must lie in (0, 1e-3]");
    if (c.t2_envelope && !(c.t2_envelope->t2 > 0 && c.t2_envelope->exponent > 0))
        throw ValidationError("T2 envelope needs T2 > 0 and p > 0");
}

inline void require_runnable(const PulseProgram& p) {
    for (const auto& d : validate_program(p))
        if (is_structural(d.kind)) throw ValidationError(d.message);
}

inline double apply_t2_envelope(double p0, double T, const T2Envelope& env) {
    return 0.5 + (p0 - 0.5) * std::exp(-std::pow(T / env.t2, env.exponent));
}

namespace detail {

// exp(-i H t) for traceless Hermitian 2x2 H.
inline Operator2 expm_traceless(const Operator2& H, double t) {
    const double h = std::sqrt(std::norm(H(0, 0)) + std::norm(H(0, 1)));
    const double a = h * t;
    const double sinc = std::abs(a) < 1e-8 ? t * (1 - a * a / 6) : std::sin(a) / h;
    return std::cos(a) * Operator2::Identity() - cplx(0, sinc) * H;
}

// One step of Newton-Schulz towards the polar factor.
template <class M>
M reproject(const M& U) {
    const auto n = U.rows();
    return U * (3.0 * M::Identity(n, n) - U.adjoint() * U) * 0.5;
}

struct ClassicalDrive {
    double A = 0;       // rad/us
    double w = 0;       // rad/us
    double theta0 = 0;
    double delta = 0;   // rad/us
    double bz(double t) const { return A * std::sin(w * t + theta0) + delta; }
};

inline ClassicalDrive make_drive(const ACField& f, double detuning_mhz) {
    return {angular(f.amplitude), angular(f.frequency), f.phase_offset, angular(detuning_mhz)};
}

// (Omega/2)(cos ph sx + sin ph sy) + (bz/2) sz, all angular.
inline Operator2 drive_hamiltonian(double omega, double ph, double bz) {
    Operator2 H;
    const cplx e = std::polar(omega / 2, ph);
    H << -bz / 2, e, std::conj(e), bz / 2;
    return H;
}

// sigma_z-only evolution has a closed form.
inline Operator2 delay_unitary(const ClassicalDrive& d, double t0, double dur) {
    const double tm = t0 + dur / 2;
    const double phase =
        (d.w > 0 ? d.A / d.w * std::sin(d.w * tm + d.theta0) * std::sin(d.w * dur / 2) : 0.0) + d.delta * dur / 2;
    Operator2 U = Operator2::Zero();
    U(0, 0) = std::polar(1.0, phase);
    U(1, 1) = std::polar(1.0, -phase);
    return U;
}

// Dormand-Prince 5(4) for dU/dt = -i H(t) U on [t0, t1].
template <class HFn>
Operator2 dopri5(const HFn& H, double t0, double t1, double tol, double hmax) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    const cplx mi(0, -1);
    auto f = [&](double t, const Operator2& U) -> Operator2 { return mi * (H(t) * U); };

    const double span = t1 - t0;
    Operator2 U = Operator2::Identity();
    if (!(span > 0)) return U;
    const double hnorm = std::sqrt(std::norm(H(t0)(0, 0)) + std::norm(H(t0)(0, 1)));
    double h = std::min({span, hmax, hnorm > 0 ? 0.5 / hnorm : span});
    const double hmin = 1e-12 * span;
    double t = t0;
    Operator2 k1 = f(t, U);
    bool done = false;
    long guard = 0;
    while (!done) {
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }
        const Operator2 k2 = f(t + c2 * h, U + h * a21 * k1);
        const Operator2 k3 = f(t + c3 * h, U + h * (a31 * k1 + a32 * k2));
        const Operator2 k4 = f(t + c4 * h, U + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Operator2 k5 = f(t + c5 * h, U + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Operator2 k6 = f(t + h, U + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Operator2 U5 = U + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Operator2 k7 = f(t + h, U5);
        const double err =
            (h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).cwiseAbs().maxCoeff();
        const double ratio = err / tol;
        if (ratio <= 1.0) {
            t = last ? t1 : t + h;
            U = U5;
            k1 = k7;
            done = last;
        }
        const double fac = ratio == 0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
        if (!done) {
            h = std::min(h * fac, hmax);
            if (!(h > hmin)) throw NumericIntegrityError("adaptive step size underflow");
        }
        if (++guard > 50'000'000) throw NumericIntegrityError("adaptive integrator exceeded step budget");
    }
    return U;
}

// Fixed midpoint steps with exact per-step exponentials.
template <class HFn>
Operator2 midpoint_steps(const HFn& H, double t0, double dur, double max_step) {
    const auto n = static_cast<long>(std::ceil(dur / max_step));
    const double h = dur / static_cast<double>(n);
    Operator2 U = Operator2::Identity();
    for (long k = 0; k < n; ++k) U = expm_traceless(H(t0 + (static_cast<double>(k) + 0.5) * h), h) * U;
    return U;
}

struct Tracker {
    double tol;
    double worst = 0;
    // Checks a freshly computed step operator and returns it re-projected.
    template <class M>
    M accept(const M& U) {
        const double e = unitarity_error(U);
        worst = std::max(worst, e);
        if (!(e <= tol)) throw NumericIntegrityError("unitarity drift " + std::to_string(e) + " exceeds tolerance");
        return reproject(U);
    }
};

inline void require_oracle_step(double max_step, double fastest_freq_mhz) {
    if (fastest_freq_mhz > 0 && max_step > 1.0 / (1000.0 * fastest_freq_mhz))
        throw ValidationError("oracle max_step must resolve the fastest period with >= 1000 steps");
}

inline double fastest_program_freq(const PulseProgram& p) {
    double f = std::abs(p.detuning);
    for (const auto& s : p.segments) f = std::max(f, s.rabi);
    if (p.init_pulse) f = std::max(f, p.init_pulse->rabi);
    if (p.final_pulse) f = std::max(f, p.final_pulse->rabi);
    return f;
}

struct ClassicalRun {
    Operator2 U;
    double unitarity_error;
};

inline ClassicalRun run_classical(const PulseProgram& p, const ACField& f, const SimulationConfig& cfg,
                                  bool with_boundaries) {
    validate(f);
    validate(cfg);
    require_runnable(p);
    const bool oracle = cfg.integrator == Integrator::FixedStepOracle;
    if (oracle) require_oracle_step(cfg.max_step, std::max(fastest_program_freq(p), f.frequency));
    const ClassicalDrive d = make_drive(f, p.detuning);
    Tracker track{oracle ? oracle_unitarity_tol : adaptive_unitarity_tol};

    auto segment = [&](double rabi, double axis, double t0, double dur) -> Operator2 {
        const double omega = angular(rabi);
        auto H = [&](double t) { return drive_hamiltonian(omega, axis, d.bz(t)); };
        if (oracle) return midpoint_steps(H, t0, dur, cfg.max_step);
        if (rabi == 0) return delay_unitary(d, t0, dur);
        return dopri5(H, t0, t0 + dur, cfg.rel_tol, cfg.max_step);
    };
    auto boundary = [&](const BoundaryPulse& b, double t0) -> Operator2 {
        const double axis = boundary_axis(b.phase);
        if (cfg.boundary_pulses == BoundaryMode::Ideal) return rotation_operator(b.rotation(), planar_axis(axis));
        return segment(b.rabi, axis, t0, b.duration);
    };

    Operator2 U = Operator2::Identity();
    if (with_boundaries && p.init_pulse) U = track.accept(boundary(*p.init_pulse, -p.init_pulse->duration));
    double t = 0;
    for (const auto& s : p.segments) {
        const bool pulse = s.kind == SegmentKind::Pulse;
        U = track.accept(segment(pulse ? s.rabi : 0.0, s.phase, t, s.duration)) * U;
        t += s.duration;
    }
    if (with_boundaries && p.final_pulse) U = track.accept(boundary(*p.final_pulse, t)) * U;
    const double e = unitarity_error(U);
    if (!(e <= track.tol)) throw NumericIntegrityError("total unitarity drift exceeds tolerance");
    return {U, std::max(track.worst, e)};
}

// Joint probe + nuclei model. Ordering kron(probe, nuclei); angular units.
class BathModel {
public:
    using Mat = Eigen::MatrixXcd;

    BathModel(const NuclearBath& b, double detuning_mhz) {
        validate(b);
        const int n = static_cast<int>(b.spins.size());
        dn_ = 1 << n;
        dim_ = 2 * dn_;
        Mat Hn = Mat::Zero(dn_, dn_);   // nuclear Zeeman, probe-independent
        Mat Hhf = Mat::Zero(dn_, dn_);  // hyperfine, m_s = -1 branch only
        Eigen::Matrix2cd iz, ix;
        iz << 0.5, 0, 0, -0.5;
        ix << 0, 0.5, 0.5, 0;
        for (int j = 0; j < n; ++j) {
            const auto& s = b.spins[static_cast<std::size_t>(j)];
            const Mat Iz = embed(iz, j, n), Ix = embed(ix, j, n);
            Hn -= angular(khz_to_mhz(s.gamma * b.field_B)) * Iz;
            Hhf += angular(khz_to_mhz(s.a_par)) * Iz + angular(khz_to_mhz(s.a_perp)) * Ix;
        }
        H0_ = Mat::Zero(dim_, dim_);
        H0_.topLeftCorner(dn_, dn_) = Hn;
        H0_.bottomRightCorner(dn_, dn_) = Hn + Hhf;
        const double dz = angular(detuning_mhz) / 2;
        H0_.topLeftCorner(dn_, dn_).diagonal().array() -= dz;
        H0_.bottomRightCorner(dn_, dn_).diagonal().array() += dz;
        fastest_ = std::abs(detuning_mhz);
        for (const auto& s : b.spins)
            fastest_ = std::max(fastest_, khz_to_mhz(std::abs(s.gamma * b.field_B) + std::abs(s.a_par) + std::abs(s.a_perp)));
    }

    int dim() const { return dim_; }
    int nuclear_dim() const { return dn_; }
    double fastest_freq() const { return fastest_; }

    Mat hamiltonian(double rabi, double axis) const {
        Mat H = H0_;
        if (rabi != 0) {
            const cplx e = std::polar(angular(rabi) / 2, axis);
            H.topRightCorner(dn_, dn_).diagonal().array() += e;
            H.bottomLeftCorner(dn_, dn_).diagonal().array() += std::conj(e);
        }
        return H;
    }

    // Probe operator on the joint space.
    Mat lift(const Operator2& u) const {
        Mat U = Mat::Zero(dim_, dim_);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) U.block(r * dn_, c * dn_, dn_, dn_).diagonal().setConstant(u(r, c));
        return U;
    }

    // (1/d_n) || (<ref| x 1) U (|in> x 1) ||_F^2
    double readout(const Mat& U, const State2& in, const State2& ref) const {
        const Mat M = in(0) * U.leftCols(dn_) + in(1) * U.rightCols(dn_);
        const Mat R = std::conj(ref(0)) * M.topRows(dn_) + std::conj(ref(1)) * M.bottomRows(dn_);
        return std::clamp(R.squaredNorm() / dn_, 0.0, 1.0);
    }

private:
    int dn_ = 1, dim_ = 2;
    double fastest_ = 0;
    Mat H0_;

    static Mat embed(const Eigen::Matrix2cd& op, int j, int n) {
        Mat out = Mat::Identity(1, 1);
        for (int k = 0; k < n; ++k) {
            const Mat f = k == j ? Mat(op) : Mat::Identity(2, 2);
            Mat next(out.rows() * 2, out.cols() * 2);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) next.block(r * out.rows(), c * out.cols(), out.rows(), out.cols()) = f(r, c) * out;
            out = next;
        }
        return out;
    }
};

// exp(-i A) for Hermitian-times-scalar arguments via Taylor + scaling and squaring.
inline Eigen::MatrixXcd expm_taylor(const Eigen::MatrixXcd& H, double t) {
    const auto n = H.rows();
    Eigen::MatrixXcd A = cplx(0, -t) * H;
    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
    int s = norm > 0.25 ? static_cast<int>(std::ceil(std::log2(norm / 0.25))) : 0;
    A /= std::ldexp(1.0, s);
    Eigen::MatrixXcd E = Eigen::MatrixXcd::Identity(n, n), term = E;
    for (int k = 1; k <= 30; ++k) {
        term = term * A / static_cast<double>(k);
        E += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (; s > 0; --s) E = E * E;
    return E;
}

inline Eigen::MatrixXcd matrix_power(Eigen::MatrixXcd B, long n) {
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Identity(B.rows(), B.cols());
    while (n > 0) {
        if (n & 1) R = B * R;
        n >>= 1;
        if (n) B = B * B;
    }
    return R;
}

struct BathRun {
    Eigen::MatrixXcd U;
    double unitarity_error;
};

// Segments are piecewise constant: adaptive route diagonalises each distinct
// Hamiltonian once; the oracle route takes fixed Taylor steps.
inline BathRun run_bath(const PulseProgram& p, const BathModel& m, const SimulationConfig& cfg) {
    using Mat = Eigen::MatrixXcd;
    const bool oracle = cfg.integrator == Integrator::FixedStepOracle;
    if (oracle) require_oracle_step(cfg.max_step, std::max(fastest_program_freq(p), m.fastest_freq()));
    Tracker track{oracle ? oracle_unitarity_tol : adaptive_unitarity_tol};

    struct Eig {
        double rabi, axis;
        Eigen::VectorXd w;
        Mat V;
    };
    struct Cached {
        std::size_t eig;
        double dur;
        Mat U;
    };
    std::vector<Eig> eigs;
    std::vector<Cached> cache;

    auto segment = [&](double rabi, double axis, double dur) -> Mat {
        if (rabi == 0) axis = 0;
        if (oracle) {
            const auto n = static_cast<long>(std::ceil(dur / cfg.max_step));
            return matrix_power(expm_taylor(m.hamiltonian(rabi, axis), dur / static_cast<double>(n)), n);
        }
        std::size_t ei = 0;
        while (ei < eigs.size() && !(eigs[ei].rabi == rabi && eigs[ei].axis == axis)) ++ei;
        if (ei == eigs.size()) {
            Eigen::SelfAdjointEigenSolver<Mat> es(m.hamiltonian(rabi, axis));
            if (es.info() != Eigen::Success) throw NumericIntegrityError("eigendecomposition failed");
            eigs.push_back({rabi, axis, es.eigenvalues(), es.eigenvectors()});
        }
        for (const auto& c : cache)
            if (c.eig == ei && c.dur == dur) return c.U;
        const auto& e = eigs[ei];
        Eigen::VectorXcd ph(e.w.size());
        for (Eigen::Index k = 0; k < e.w.size(); ++k) ph(k) = std::polar(1.0, -e.w(k) * dur);
        Mat U = e.V * ph.asDiagonal() * e.V.adjoint();
        U = track.accept(U);
        cache.push_back({ei, dur, U});
        return U;
    };
    auto boundary = [&](const BoundaryPulse& b) -> Mat {
        const double axis = boundary_axis(b.phase);
        if (cfg.boundary_pulses == BoundaryMode::Ideal) return m.lift(rotation_operator(b.rotation(), planar_axis(axis)));
        return segment(b.rabi, axis, b.duration);
    };

    Mat U = Mat::Identity(m.dim(), m.dim());
    if (p.init_pulse) U = boundary(*p.init_pulse);
    for (const auto& s : p.segments) {
        const bool pulse = s.kind == SegmentKind::Pulse;
        Mat S = segment(pulse ? s.rabi : 0.0, s.phase, s.duration);
        if (oracle) S = track.accept(S);
        U = S * U;
    }
    if (p.final_pulse) U = boundary(*p.final_pulse) * U;
    const double e = unitarity_error(U);
    if (!(e <= track.tol)) throw NumericIntegrityError("total unitarity drift exceeds tolerance");
    return {U, std::max(track.worst, e)};
}

inline State2 input_state(const PulseProgram& p) {
    return p.init_pulse ? ground_state() : prepare_superposition(p.init_phase);
}
inline State2 reference_state(const PulseProgram& p) {
    return p.final_pulse ? ground_state() : prepare_superposition(p.init_phase);
}

} // namespace detail

// Unitary of the pi train alone (no boundary pulses).
inline Operator2 propagate_train(const PulseProgram& p, const ACField& f, const SimulationConfig& cfg) {
    return detail::run_classical(p, f, cfg, false).U;
}

// Total unitary including init/final pulses (finite or ideal per cfg).
inline Operator2 propagate_classical(const PulseProgram& p, const ACField& f, const SimulationConfig& cfg) {
    return detail::run_classical(p, f, cfg, true).U;
}

inline Evaluation evaluate_classical(const PulseProgram& p, const ACField& f, const SimulationConfig& cfg) {
    const auto r = detail::run_classical(p, f, cfg, true);
    const cplx a = detail::reference_state(p).dot(r.U * detail::input_state(p));
    return {std::clamp(std::norm(a), 0.0, 1.0), r.unitarity_error};
}

inline Evaluation evaluate_bath(const PulseProgram& p, const NuclearBath& b, const SimulationConfig& cfg) {
    validate(cfg);
    require_runnable(p);
    const detail::BathModel m(b, p.detuning);
    const auto r = detail::run_bath(p, m, cfg);
    return {m.readout(r.U, detail::input_state(p), detail::reference_state(p)), r.unitarity_error};
}

inline double propagate_bath(const PulseProgram& p, const NuclearBath& b, const SimulationConfig& cfg) {
    return evaluate_bath(p, b, cfg).p0;
}

inline Evaluation evaluate(const PulseProgram& p, const SignalSource& src, const SimulationConfig& cfg) {
    Evaluation e = std::visit(
        [&](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ACField>) return evaluate_classical(p, s, cfg);
            else return evaluate_bath(p, s, cfg);
        },
        src);
    if (cfg.t2_envelope) e.p0 = apply_t2_envelope(e.p0, train_duration(p), *cfg.t2_envelope);
    return e;
}

inline double survival_probability(const PulseProgram& p, const SignalSource& src, const SimulationConfig& cfg) {
    return evaluate(p, src, cfg).p0;
}

inline SimulationConfig oracle_config(double max_step, BoundaryMode mode = BoundaryMode::Finite) {
    SimulationConfig c;
    c.integrator = Integrator::FixedStepOracle;
    c.max_step = max_step;
    c.boundary_pulses = mode;
    return c;
}

inline Operator2 oracle_propagate(const PulseProgram& p, const ACField& f, double max_step,
                                  BoundaryMode mode = BoundaryMode::Finite) {
    return propagate_classical(p, f, oracle_config(max_step, mode));
}

inline double oracle_survival(const PulseProgram& p, const SignalSource& src, double max_step,
                              BoundaryMode mode = BoundaryMode::Finite) {
    return survival_probability(p, src, oracle_config(max_step, mode));
}

} // namespace ddsense
