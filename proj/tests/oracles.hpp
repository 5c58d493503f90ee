#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// exp(-i H t) by Pade (Eigen unsupported).
inline Mat expmi(const Mat& H, double t) {
    const Mat A = cplx(0, -t) * H;
    return A.exp();
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

// Paulis in the {|0>, |-1>} ordering with sz = diag(-1, 1).
inline Mat sx() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Mat sy() {
    Mat m(2, 2);
    m << 0, cplx(0, 1), cplx(0, -1), 0;
    return m;
}
inline Mat sz() {
    Mat m(2, 2);
    m << -1, 0, 0, 1;
    return m;
}
inline Mat id(int n) { return Mat::Identity(n, n); }

struct Nucleus {
    double a_par_khz, a_perp_khz, gamma;
};

// Piecewise-constant timeline element for the brute-force joint oracle.
struct Step {
    double rabi;   // MHz, 0 for free evolution, < 0 for an instantaneous rotation
    double axis;   // rad
    double dur;    // us (rotation angle for instantaneous steps)
};

inline Mat joint_hamiltonian(const std::vector<Nucleus>& ns, double B, double rabi, double axis) {
    const int n = static_cast<int>(ns.size());
    const int dn = 1 << n;
    Mat iz(2, 2), ix(2, 2);
    iz << 0.5, 0, 0, -0.5;
    ix << 0, 0.5, 0.5, 0;
    Mat proj(2, 2);
    proj << 0, 0, 0, 1;
    Mat H = Mat::Zero(2 * dn, 2 * dn);
    const double tp = 2 * M_PI;
    for (int j = 0; j < n; ++j) {
        Mat Iz = id(1), Ix = id(1);
        for (int k = 0; k < n; ++k) {
            Iz = kron(Iz, k == j ? iz : id(2));
            Ix = kron(Ix, k == j ? ix : id(2));
        }
        H += kron(id(2), -tp * ns[j].gamma * B * 1e-3 * Iz);
        H += kron(proj, tp * 1e-3 * (ns[j].a_par_khz * Iz + ns[j].a_perp_khz * Ix));
    }
    H += kron(tp * rabi / 2 * (std::cos(axis) * sx() + std::sin(axis) * sy()), id(dn));
    return H;
}

inline Mat joint_unitary(const std::vector<Nucleus>& ns, double B, const std::vector<Step>& steps) {
    const int dim = 2 << ns.size();
    Mat U = id(dim);
    for (const auto& s : steps) {
        if (s.rabi < 0) {
            const Mat R = expmi(0.5 * (std::cos(s.axis) * sx() + std::sin(s.axis) * sy()), s.dur);
            U = kron(R, id(dim / 2)) * U;
        } else {
            U = expmi(joint_hamiltonian(ns, B, s.rabi, s.axis), s.dur) * U;
        }
    }
    return U;
}

// Survival of |0> after the steps with a maximally mixed bath.
inline double joint_survival(const std::vector<Nucleus>& ns, double B, const std::vector<Step>& steps) {
    const Mat U = joint_unitary(ns, B, steps);
    const int dn = static_cast<int>(U.rows()) / 2;
    return U.topLeftCorner(dn, dn).squaredNorm() / dn;
}

} // namespace oracle
