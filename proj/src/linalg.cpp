#include "qgscat/linalg.hpp"

#include "qgscat/errors.hpp"

#include <cmath>
#include <string>

namespace qgscat {

CheckedLU::CheckedLU(const CMatrix& a, std::string_view what) {
    if (a.rows() != a.cols()) {
        throw InvalidArgument(std::string(what) + ": matrix not square");
    }
    if (a.rows() == 0) {
        rcond_ = 1.0;
        return;
    }
    if (!a.allFinite()) {
        throw SingularMatrix(std::string(what) + ": non-finite entries");
    }
    lu_.compute(a);
    rcond_ = lu_.rcond();
    if (!(rcond_ * kConditionCap >= 1.0)) {
        throw SingularMatrix(std::string(what) + ": condition estimate exceeds cap (rcond=" +
                             std::to_string(rcond_) + ")");
    }
}

CMatrix checked_inverse(const CMatrix& a, std::string_view what) {
    if (a.rows() == 0) {
        return a;
    }
    return CheckedLU(a, what).inverse();
}

double op_norm(const CMatrix& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues()(0);
}

double min_singular_value(const CMatrix& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<CMatrix> svd(a);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1);
}

CMatrix principal_block(const CMatrix& a, std::span<const std::size_t> idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    CMatrix out(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            out(r, c) = a(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
        }
    }
    return out;
}

} // namespace qgscat
