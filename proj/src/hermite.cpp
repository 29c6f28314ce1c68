#include "hvf/hermite.hpp"

#include <cmath>
#include <sstream>

namespace hvf {

std::string to_string(Variant v) { return v == Variant::plain ? "plain" : "structured"; }

Variant variant_from_string(const std::string& name) {
  if (name == "plain") return Variant::plain;
  if (name == "structured") return Variant::structured;
  throw std::invalid_argument("unknown surrogate variant '" + name + "'");
}

HermiteCoefficients HermiteCoefficients::zero(Index dim, Index n) {
  return {Vec::Zero(n), Mat::Zero(dim, n)};
}

Vec HermiteCoefficients::stacked() const {
  const Index n = alphas.size();
  Vec out(n + betas.size());
  out.head(n) = alphas;
  out.tail(betas.size()) = Eigen::Map<const Vec>(betas.data(), betas.size());
  return out;
}

HermiteCoefficients HermiteCoefficients::unstack(const Vec& stacked, Index dim) {
  if (stacked.size() % (dim + 1) != 0) throw std::invalid_argument("unstack: bad length");
  const Index n = stacked.size() / (dim + 1);
  HermiteCoefficients c;
  c.alphas = stacked.head(n);
  c.betas = Eigen::Map<const Mat>(stacked.data() + n, dim, n);
  return c;
}

Surrogate::Surrogate(KernelSpec kernel, Mat centers, HermiteCoefficients coeffs, Variant variant,
                     std::optional<Mat> Q, FitInfo info)
    : kernel_(kernel),
      centers_(std::move(centers)),
      coeffs_(std::move(coeffs)),
      variant_(variant),
      Q_(std::move(Q)),
      info_(info) {
  const Index n = kernel_.dim();
  if (centers_.rows() != n && centers_.cols() != 0) {
    throw std::invalid_argument("Surrogate: center dimension mismatch");
  }
  if (centers_.cols() == 0) centers_.resize(n, 0);
  if (coeffs_.alphas.size() != centers_.cols() || coeffs_.betas.cols() != centers_.cols() ||
      (coeffs_.betas.rows() != n && centers_.cols() > 0)) {
    throw std::invalid_argument("Surrogate: coefficient shape mismatch");
  }
  if (coeffs_.betas.cols() == 0) coeffs_.betas.resize(n, 0);
  const bool structured = variant_ == Variant::structured;
  if (structured != kernel_.structured()) {
    throw std::invalid_argument("Surrogate: kernel structure flag does not match variant");
  }
  if (structured && (!Q_ || Q_->rows() != n || Q_->cols() != n)) {
    throw std::invalid_argument("Surrogate: structured variant requires an N x N matrix Q");
  }
}

double Surrogate::expansion(const Vec& x, Vec* grad) const {
  double value = 0.0;
  if (grad) grad->setZero(x.size());
  const Index n = centers_.cols();
  for (Index i = 0; i < n; ++i) {
    kernel_.accumulate(centers_.col(i).data(), coeffs_.alphas(i), coeffs_.betas.col(i).data(),
                       x.data(), value, grad ? grad->data() : nullptr);
  }
  return value;
}

double Surrogate::value_and_gradient(const Vec& x, Vec& grad) const {
  const double corr = expansion(x, &grad);
  if (variant_ == Variant::plain) return corr;
  const Vec qx = *Q_ * x;
  const double q = x.dot(qx);
  if (!(q > 0.0)) {
    // h(0) = 0 and the gradient 2 h grad h tends to 0.
    grad.setZero(x.size());
    return corr * corr;
  }
  const double root = std::sqrt(q);
  const double h = root + corr;
  grad = (2.0 * h) * (qx / root + grad);
  return h * h;
}

double Surrogate::value(const Vec& x) const {
  const double corr = expansion(x);
  if (variant_ == Variant::plain) return corr;
  const double q = x.dot(*Q_ * x);
  const double h = std::sqrt(std::max(q, 0.0)) + corr;
  return h * h;
}

Vec Surrogate::gradient(const Vec& x) const {
  Vec g;
  value_and_gradient(x, g);
  return g;
}

double eval(const Surrogate& s, const Vec& x) { return s.value(x); }
Vec eval_grad(const Surrogate& s, const Vec& x) { return s.gradient(x); }

Vec matvec_M(const Kernel& kernel, const Mat& centers, const Vec& stacked) {
  const Index dim = centers.rows();
  const Index n = centers.cols();
  if (stacked.size() != n * (dim + 1)) throw std::invalid_argument("matvec_M: size mismatch");
  Vec out = Vec::Zero(stacked.size());
  const double* alphas = stacked.data();
  const double* betas = stacked.data() + n;
  double* values = out.data();
  double* grads = out.data() + n;
  // Row block j is the surrogate value and gradient at x_j.
  for (Index j = 0; j < n; ++j) {
    const double* xj = centers.col(j).data();
    double* gj = grads + j * dim;
    for (Index i = 0; i < n; ++i) {
      kernel.accumulate(centers.col(i).data(), alphas[i], betas + i * dim, xj, values[j], gj);
    }
  }
  return out;
}

Vec diagonal_M(const Kernel& kernel, const Mat& centers) {
  const Index dim = centers.rows();
  const Index n = centers.cols();
  Vec diag(n * (dim + 1));
  const WendlandC4& radial = kernel.radial();
  const ProfileValues p0 = radial.profile(0.0);
  for (Index j = 0; j < n; ++j) {
    const auto x = centers.col(j);
    if (!kernel.structured()) {
      diag(j) = p0.psi;
      diag.segment(n + j * dim, dim).setConstant(-2.0 * p0.dpsi);
    } else {
      // E_k(x, x) = 2 psi x x^T + 2 m psi I - 2 m^2 psi' I with m = |x|^2.
      const double m = x.squaredNorm();
      diag(j) = m * m * p0.psi;
      for (Index k = 0; k < dim; ++k) {
        diag(n + j * dim + k) = 2.0 * p0.psi * x(k) * x(k) + 2.0 * m * p0.psi - 2.0 * m * m * p0.dpsi;
      }
    }
  }
  return diag;
}

Vec assemble_rhs(const Mat& centers, const Vec& values, const Mat& gradients, Variant variant,
                 const Mat* Q) {
  const Index dim = centers.rows();
  const Index n = centers.cols();
  if (values.size() != n || gradients.cols() != n || (n > 0 && gradients.rows() != dim)) {
    throw std::invalid_argument("assemble_rhs: data shape mismatch");
  }
  Vec rhs(n * (dim + 1));
  if (variant == Variant::plain) {
    rhs.head(n) = values;
    rhs.tail(n * dim) = Eigen::Map<const Vec>(gradients.data(), n * dim);
    return rhs;
  }
  if (!Q) throw std::invalid_argument("assemble_rhs: structured variant requires Q");
  for (Index j = 0; j < n; ++j) {
    const Vec x = centers.col(j);
    const Vec qx = *Q * x;
    const double q = x.dot(qx);
    if (!(values(j) > 0.0) || !(q > 0.0)) {
      std::ostringstream os;
      os << "assemble_rhs: structured data point " << j
         << " must have v > 0 and x != 0 (v = " << values(j) << ")";
      throw InvalidDataError(os.str(), j);
    }
    const double sv = std::sqrt(values(j));
    const double sq = std::sqrt(q);
    rhs(j) = sv - sq;
    rhs.segment(n + j * dim, dim) = gradients.col(j) / (2.0 * sv) - qx / sq;
  }
  return rhs;
}

void check_distinct(const Mat& centers, double tol) {
  const Index n = centers.cols();
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      if ((centers.col(i) - centers.col(j)).squaredNorm() <= tol * tol) {
        std::ostringstream os;
        os << "centers " << i << " and " << j << " coincide";
        throw InvalidDataError(os.str(), j);
      }
    }
  }
}

FitResult fit(const Kernel& kernel, const Mat& centers, const Vec& rhs, const FitOptions& options,
              const Vec* warm_start) {
  const Index dim = centers.rows();
  const Index n = centers.cols();
  if (rhs.size() != n * (dim + 1)) throw std::invalid_argument("fit: rhs size mismatch");
  check_distinct(centers);
  if (kernel.structured()) {
    for (Index j = 0; j < n; ++j) {
      if (centers.col(j).squaredNorm() == 0.0) {
        throw InvalidDataError("fit: structured kernel cannot interpolate at the origin", j);
      }
    }
  }

  const Vec diag = diagonal_M(kernel, centers);
  LinearOperator op;
  op.dim = rhs.size();
  op.apply = [&](const Vec& in, Vec& out) {
    out = matvec_M(kernel, centers, in);
    if (options.nugget > 0.0) out.array() += options.nugget * diag.array() * in.array();
  };
  CgOptions cg;
  cg.tol = options.cg_tol;
  cg.max_iter = options.max_iter;
  if (options.jacobi) cg.diagonal = Vec((1.0 + options.nugget) * diag);

  const CgResult res = cg_solve(op, rhs, cg, warm_start);
  FitResult out;
  out.coeffs = HermiteCoefficients::unstack(res.x, dim);
  out.info.cg_iterations = res.iterations;
  out.info.cg_residual = res.relative_residual;
  out.info.nugget = options.nugget;
  return out;
}

Surrogate fit_surrogate(const KernelSpec& spec, const Mat& centers, const Vec& values,
                        const Mat& gradients, Variant variant, const std::optional<Mat>& Q,
                        const FitOptions& options) {
  const Kernel kernel(spec);
  const Vec rhs = assemble_rhs(centers, values, gradients, variant, Q ? &*Q : nullptr);
  FitResult fr = fit(kernel, centers, rhs, options);
  return Surrogate(spec, centers, std::move(fr.coeffs), variant, Q, fr.info);
}

double native_norm_sq(const Surrogate& s) {
  const Vec c = s.coefficients().stacked();
  if (c.size() == 0) return 0.0;
  return c.dot(matvec_M(s.kernel(), s.centers(), c));
}

}  // namespace hvf
