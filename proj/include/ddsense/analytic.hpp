#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sequence.hpp"
#include "spinsys.hpp"

namespace ddsense {

struct RotationParams {
    double theta = pi;
    Vec3 axis = Vec3::UnitX();
    double beta = 0;
    bool validity_warning = false;  // |A/rabi| above 0.2
};

// Finite-width pi pulse centred at t_k under A sin(2 pi f t + theta0) sigma_z / 2.
inline RotationParams perturbative_rotation(double A, double freq, double t_k, double rabi, double phi_k,
                                            double theta0 = 0) {
    if (!(rabi > 0)) throw ValidationError("Rabi frequency must be positive");
    RotationParams r;
    r.beta = A * std::sin(angular(freq) * t_k + theta0) / rabi;
    r.theta = pi + pi / 2 * r.beta * r.beta;
    r.axis = Vec3(std::cos(r.beta) * std::cos(phi_k), std::cos(r.beta) * std::sin(phi_k), std::sin(r.beta));
    r.validity_warning = std::abs(A / rabi) > 0.2;
    return r;
}

// Product of perturbed rotations for a train with centres at tau/2 + k tau;
// free evolution is not included.
inline Operator2 perturbative_train(const std::vector<double>& pulse_phases, double A, double freq, double tau,
                                    double rabi, double theta0 = 0) {
    Operator2 U = Operator2::Identity();
    for (std::size_t k = 0; k < pulse_phases.size(); ++k) {
        const auto r = perturbative_rotation(A, freq, tau / 2 + static_cast<double>(k) * tau, rabi, pulse_phases[k], theta0);
        U = rotation_operator(r.theta, r.axis) * U;
    }
    return U;
}

enum class HarmonicOrder { Second, Fourth };

inline double xy8_spurious_amplitude(HarmonicOrder o, double phi, double beta0) {
    const double b2 = beta0 * beta0;
    return o == HarmonicOrder::Second ? 8 * (1 - std::sin(2 * phi)) * b2
                                      : 2 * (2 - std::sqrt(2.0)) * (1 + std::sin(2 * phi)) * b2;
}

inline double yy8_spurious_amplitude(HarmonicOrder o, double phi, double beta0) {
    const double b2 = beta0 * beta0;
    const double k = o == HarmonicOrder::Second ? 4.0 : 2 - std::sqrt(2.0);
    return k * (1 - std::cos(2 * phi)) * b2;
}

inline double resonance_interval(double f_signal) {
    if (!(f_signal > 0)) throw ValidationError("signal frequency must be > 0");
    return 1.0 / (2.0 * f_signal);
}

struct Rational {
    long num = 1;
    long den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }
    bool operator==(const Rational& o) const { return num * o.den == o.num * den; }
};

inline Rational make_rational(long n, long d) {
    if (d == 0 || n <= 0 || d < 0) throw ValidationError("harmonic order must be a positive rational");
    const long g = std::gcd(n, d);
    return {n / g, d / g};
}

// "4", "4/5", "1.25" (decimal converted by exact power-of-ten denominator).
inline Rational parse_rational(const std::string& s) {
    try {
        const auto slash = s.find('/');
        if (slash != std::string::npos) return make_rational(std::stol(s.substr(0, slash)), std::stol(s.substr(slash + 1)));
        const auto dot = s.find('.');
        if (dot == std::string::npos) return make_rational(std::stol(s), 1);
        const std::string frac = s.substr(dot + 1);
        long den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        return make_rational(std::stol(s.substr(0, dot) + frac), den);
    } catch (const std::logic_error&) {
        throw ValidationError("cannot parse harmonic order '" + s + "'");
    }
}

struct HarmonicPosition {
    Rational order;
    double tau = 0;             // us
    double apparent_freq = 0;   // MHz, k f
};

inline std::vector<HarmonicPosition> harmonic_positions(double f_signal, const std::vector<Rational>& orders) {
    if (!(f_signal > 0)) throw ValidationError("signal frequency must be > 0");
    std::vector<HarmonicPosition> out;
    for (const auto& k : orders) {
        if (!(k.value() > 0)) throw ValidationError("harmonic order must be > 0");
        out.push_back({k, 1.0 / (2.0 * k.value() * f_signal), k.value() * f_signal});
    }
    return out;
}

} // namespace ddsense
