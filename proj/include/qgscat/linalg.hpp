#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <string_view>
#include <vector>

namespace qgscat {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Reciprocal-condition floor below which a dense factorization is refused.
inline constexpr double kConditionCap = 1e14;

/// LU factorization with a condition estimate. Throws SingularMatrix (with
/// `what` in the message) when the estimate exceeds kConditionCap.
class CheckedLU {
public:
    CheckedLU(const CMatrix& a, std::string_view what);

    CMatrix solve(const CMatrix& rhs) const { return lu_.solve(rhs); }
    CMatrix inverse() const { return lu_.inverse(); }
    double rcond() const { return rcond_; }

private:
    Eigen::PartialPivLU<CMatrix> lu_;
    double rcond_ = 0.0;
};

CMatrix checked_inverse(const CMatrix& a, std::string_view what);

/// Spectral norm (largest singular value).
double op_norm(const CMatrix& a);

/// Smallest singular value.
double min_singular_value(const CMatrix& a);

/// Principal submatrix on `idx` (rows and columns in the given order).
CMatrix principal_block(const CMatrix& a, std::span<const std::size_t> idx);

/// Elementwise conjugate (no transpose).
inline CMatrix conj(const CMatrix& a) { return a.conjugate(); }

} // namespace qgscat
