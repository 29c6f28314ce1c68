#include "hvf/models.hpp"

#include <cmath>

namespace hvf {

NheModel::NheModel(NheParameters params, Eigen::SparseMatrix<double> laplacian,
                   std::vector<Index> controlled_nodes)
    : ControlAffineModel(laplacian.rows(), static_cast<Index>(controlled_nodes.size()),
                         params.control_penalty *
                             Mat::Identity(static_cast<Index>(controlled_nodes.size()),
                                           static_cast<Index>(controlled_nodes.size()))),
      params_(params),
      A_(std::move(laplacian)),
      controlled_(std::move(controlled_nodes)) {}

std::array<double, 2> NheModel::node(Index k) const {
  const Index n = params_.grid_side;
  const double h = 1.0 / static_cast<double>(n);
  return {(static_cast<double>(k % n) + 0.5) * h, (static_cast<double>(k / n) + 0.5) * h};
}

Mat NheModel::input_matrix() const {
  Mat B = Mat::Zero(state_dim(), control_dim());
  for (std::size_t j = 0; j < controlled_.size(); ++j) B(controlled_[j], static_cast<Index>(j)) = 1.0;
  return B;
}

Vec NheModel::drift(const Vec& x) const {
  const Vec sq = x.array().square();
  return A_ * x + params_.beta * (sq.array() - sq.array() * x.array()).matrix();
}

Vec NheModel::input_apply(const Vec& x, const Vec& u) const {
  Vec out = Vec::Zero(x.size());
  for (std::size_t j = 0; j < controlled_.size(); ++j) out(controlled_[j]) += u(static_cast<Index>(j));
  return out;
}

Vec NheModel::input_transpose_apply(const Vec&, const Vec& p) const {
  Vec out(control_dim());
  for (std::size_t j = 0; j < controlled_.size(); ++j) out(static_cast<Index>(j)) = p(controlled_[j]);
  return out;
}

double NheModel::running_cost(const Vec& x) const { return x.squaredNorm(); }
Vec NheModel::running_cost_gradient(const Vec& x) const { return 2.0 * x; }

Vec NheModel::drift_jacobian_transpose_apply(const Vec& x, const Vec& p) const {
  const Eigen::ArrayXd reaction = params_.beta * (2.0 * x.array() - 3.0 * x.array().square());
  return A_.transpose() * p + (reaction * p.array()).matrix();
}

Vec NheModel::input_jacobian_transpose_apply(const Vec& x, const Vec&, const Vec&) const {
  return Vec::Zero(x.size());
}

Linearization NheModel::linearization() const {
  const Index n = state_dim();
  return {Mat(A_), input_matrix(), Mat::Identity(n, n)};
}

std::shared_ptr<NheModel> nhe_assemble(const NheParameters& params) {
  const Index n = params.grid_side;
  if (n < 3) throw std::invalid_argument("nhe_assemble: grid_side must be >= 3");
  const Index total = n * n;
  const double h = 1.0 / static_cast<double>(n);
  const double scale = params.alpha / (h * h);

  // Mirrored ghost nodes: a missing neighbour equals the node itself, so it
  // drops out of the stencil and rows sum to zero.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(5 * total));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const Index k = i + n * j;
      double diag = 0.0;
      auto link = [&](Index ii, Index jj) {
        if (ii < 0 || ii >= n || jj < 0 || jj >= n) return;
        entries.emplace_back(k, ii + n * jj, scale);
        diag -= scale;
      };
      link(i - 1, j);
      link(i + 1, j);
      link(i, j - 1);
      link(i, j + 1);
      entries.emplace_back(k, k, diag);
    }
  }
  Eigen::SparseMatrix<double> A(total, total);
  A.setFromTriplets(entries.begin(), entries.end());

  const auto& reg = params.control_region;
  constexpr double slack = 1e-12;
  std::vector<Index> controlled;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double xi = (static_cast<double>(i) + 0.5) * h;
      const double eta = (static_cast<double>(j) + 0.5) * h;
      if (xi >= reg[0] - slack && xi <= reg[1] + slack && eta >= reg[2] - slack &&
          eta <= reg[3] + slack) {
        controlled.push_back(i + n * j);
      }
    }
  }
  if (controlled.empty()) throw std::invalid_argument("nhe_assemble: control region contains no nodes");
  return std::make_shared<NheModel>(params, std::move(A), std::move(controlled));
}

}  // namespace hvf
