#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"

namespace ddsense {

using cplx = std::complex<double>;
using Operator2 = Eigen::Matrix2cd;
using State2 = Eigen::Vector2cd;
using Vec3 = Eigen::Vector3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Cyclic frequency (MHz) to angular frequency (rad/us). The only place the 2pi enters.
constexpr double angular(double f_mhz) noexcept { return two_pi * f_mhz; }

constexpr double khz_to_mhz(double f_khz) noexcept { return 1e-3 * f_khz; }

// Basis order {|0>, |-1>}. sigma_z = |-1><-1| - |0><0| and sigma_y follows
// from sigma_x sigma_y = i sigma_z.
namespace pauli {
inline Operator2 I() { return Operator2::Identity(); }
inline Operator2 X() {
    Operator2 m;
    m << 0, 1, 1, 0;
    return m;
}
inline Operator2 Y() {
    Operator2 m;
    m << 0, cplx(0, 1), cplx(0, -1), 0;
    return m;
}
inline Operator2 Z() {
    Operator2 m;
    m << -1, 0, 0, 1;
    return m;
}
} // namespace pauli

struct PhysicalConstants {
    double D = angular(2870.0);           // rad/us
    double gamma_e = -2.8024951;          // MHz/G; sign unused, only |gamma| enters
    std::map<std::string, double, std::less<>> gamma_n{{"1H", 4.258}, {"13C", 1.0705}}; // kHz/G
};

inline const PhysicalConstants& constants() {
    static const PhysicalConstants c;
    return c;
}

inline double gyromagnetic(std::string_view species) {
    const auto& t = constants().gamma_n;
    auto it = t.find(species);
    if (it == t.end())
        throw ValidationError("unknown nuclear species '" + std::string(species) + "'");
    return it->second;
}

template <class Derived>
double unitarity_error(const Eigen::MatrixBase<Derived>& U) {
    const auto n = U.rows();
    return (U.adjoint() * U - Derived::PlainObject::Identity(n, n)).cwiseAbs().maxCoeff();
}

inline Operator2 rotation_operator(double theta, const Vec3& axis) {
    if (std::abs(axis.norm() - 1.0) > 1e-9)
        throw ValidationError("rotation axis must be a unit vector");
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return c * pauli::I() - cplx(0, s) * (axis.x() * pauli::X() + axis.y() * pauli::Y() + axis.z() * pauli::Z());
}

// Axis in the x-y plane at azimuth `phase`.
inline Vec3 planar_axis(double phase) { return {std::cos(phase), std::sin(phase), 0.0}; }

inline State2 prepare_superposition(double phi) {
    const double r = 1.0 / std::sqrt(2.0);
    return State2(r, r * std::polar(1.0, phi));
}

inline State2 orthogonal_superposition(double phi) {
    const double r = 1.0 / std::sqrt(2.0);
    return State2(r, -r * std::polar(1.0, phi));
}

inline State2 ground_state() { return State2(1, 0); }

inline void require_unitary(const Operator2& U, double tol = 1e-9) {
    if (!(unitarity_error(U) <= tol))
        throw NumericIntegrityError("operator is not unitary within tolerance");
}

// |<phi-|U|phi+>|^2
inline double transition_probability(const Operator2& U, double phi) {
    require_unitary(U);
    const cplx a = orthogonal_superposition(phi).dot(U * prepare_superposition(phi));
    return std::clamp(std::norm(a), 0.0, 1.0);
}

// |<phi+|U|phi+>|^2
inline double survival(const Operator2& U, double phi) {
    require_unitary(U);
    const State2 s = prepare_superposition(phi);
    return std::clamp(std::norm(s.dot(U * s)), 0.0, 1.0);
}

} // namespace ddsense
