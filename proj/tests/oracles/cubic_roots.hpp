#pragma once

// Roots of a0 + a1 λ + a2 λ² + a3 λ³ via companion-matrix eigenvalues.

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace oracle {

inline std::array<std::complex<double>, 3> cubic_roots(const std::array<double, 4>& a) {
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -a[0] / a[3];
    companion(1, 2) = -a[1] / a[3];
    companion(2, 2) = -a[2] / a[3];
    const Eigen::Vector3cd ev = companion.eigenvalues();
    return {ev[0], ev[1], ev[2]};
}

}  // namespace oracle
