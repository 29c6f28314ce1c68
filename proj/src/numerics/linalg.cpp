#include "hvf/numerics.hpp"

#include <lapacke.h>

#include <cmath>
#include <sstream>

namespace hvf {

SingularMatrixError::SingularMatrixError(Index pivot, double value)
    : NumericsError([&] {
        std::ostringstream os;
        os << "singular matrix: pivot " << pivot << " has magnitude " << value;
        return os.str();
      }()),
      pivot_(pivot),
      value_(value) {}

ConvergenceError::ConvergenceError(const std::string& what, int iterations,
                                   double residual)
    : NumericsError(what), iterations_(iterations), residual_(residual) {}

Vec dense_solve(Mat a, const Vec& b, double pivot_tol) {
  const Index n = a.rows();
  if (a.cols() != n || b.size() != n) {
    throw NumericsError("dense_solve: dimension mismatch");
  }
  Vec x = b;
  if (n == 0) return x;
  const double scale = a.cwiseAbs().maxCoeff();
  const double threshold = pivot_tol * scale;

  for (Index k = 0; k < n; ++k) {
    Index p = k;
    a.col(k).tail(n - k).cwiseAbs().maxCoeff(&p);
    p += k;
    const double piv = a(p, k);
    if (!(std::abs(piv) > threshold)) throw SingularMatrixError(k, std::abs(piv));
    if (p != k) {
      a.row(p).swap(a.row(k));
      std::swap(x(p), x(k));
    }
    const Index rest = n - k - 1;
    if (rest == 0) continue;
    a.col(k).tail(rest) /= piv;
    a.bottomRightCorner(rest, rest).noalias() -=
        a.col(k).tail(rest) * a.row(k).tail(rest);
    x.tail(rest) -= a.col(k).tail(rest) * x(k);
  }
  for (Index k = n - 1; k >= 0; --k) {
    x(k) = (x(k) - a.row(k).tail(n - k - 1).dot(x.tail(n - k - 1))) / a(k, k);
  }
  return x;
}

BandedMatrix::BandedMatrix(Index n, Index kl, Index ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
      ab_(static_cast<std::size_t>(ldab_ * n), 0.0) {}

// Column-major band storage as expected by dgbsv: A(i, j) lives at
// ab[(kl + ku + i - j) + j * ldab].
double& BandedMatrix::operator()(Index i, Index j) {
  return ab_[static_cast<std::size_t>(kl_ + ku_ + i - j + j * ldab_)];
}

double BandedMatrix::operator()(Index i, Index j) const {
  if (!in_band(i, j)) return 0.0;
  return ab_[static_cast<std::size_t>(kl_ + ku_ + i - j + j * ldab_)];
}

void BandedMatrix::set_zero() { std::fill(ab_.begin(), ab_.end(), 0.0); }

Vec BandedMatrix::multiply(const Vec& x) const {
  Vec y = Vec::Zero(n_);
  for (Index j = 0; j < n_; ++j) {
    const Index lo = std::max<Index>(0, j - ku_);
    const Index hi = std::min<Index>(n_ - 1, j + kl_);
    for (Index i = lo; i <= hi; ++i) y(i) += (*this)(i, j) * x(j);
  }
  return y;
}

Vec BandedMatrix::solve(Vec rhs) {
  if (rhs.size() != n_) throw NumericsError("BandedMatrix::solve: size mismatch");
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n_));
  const lapack_int info = LAPACKE_dgbsv(
      LAPACK_COL_MAJOR, static_cast<lapack_int>(n_), static_cast<lapack_int>(kl_),
      static_cast<lapack_int>(ku_), 1, ab_.data(), static_cast<lapack_int>(ldab_),
      ipiv.data(), rhs.data(), static_cast<lapack_int>(n_));
  if (info > 0) throw SingularMatrixError(info - 1, 0.0);
  if (info < 0) throw NumericsError("dgbsv: illegal argument");
  return rhs;
}

}  // namespace hvf
