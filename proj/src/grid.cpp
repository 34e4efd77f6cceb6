#include "chemo/grid.hpp"

#include <algorithm>
#include <vector>

namespace chemo {

namespace {

void require_axis(int cells, double length) {
  if (cells < 1) throw std::invalid_argument("grid needs at least one cell per axis");
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("grid length must be positive and finite");
}

}  // namespace

Grid::Grid(int cells_x, double length_x) : dim_(1) {
  require_axis(cells_x, length_x);
  cells_[0] = cells_x;
  length_[0] = length_x;
  spacing_[0] = length_x / cells_x;
}

Grid::Grid(int cells_x, int cells_y, double length_x, double length_y) : dim_(2) {
  require_axis(cells_x, length_x);
  require_axis(cells_y, length_y);
  cells_ = {cells_x, cells_y};
  length_ = {length_x, length_y};
  spacing_ = {length_x / cells_x, length_y / cells_y};
}

double Grid::min_spacing() const {
  return dim_ == 1 ? spacing_[0] : std::min(spacing_[0], spacing_[1]);
}

double Grid::max_spacing() const {
  return dim_ == 1 ? spacing_[0] : std::max(spacing_[0], spacing_[1]);
}

double Grid::diameter() const {
  return dim_ == 1 ? length_[0] : std::hypot(length_[0], length_[1]);
}

Grid Grid::coarsened(int factor) const {
  for (int a = 0; a < dim_; ++a)
    if (factor < 1 || cells_[a] % factor != 0)
      throw std::invalid_argument("grid cannot be coarsened by " + std::to_string(factor));
  if (dim_ == 1) return Grid(cells_[0] / factor, length_[0]);
  return Grid(cells_[0] / factor, cells_[1] / factor, length_[0], length_[1]);
}

Grid Grid::refined(int factor) const {
  if (factor < 1) throw std::invalid_argument("refinement factor must be positive");
  if (dim_ == 1) return Grid(cells_[0] * factor, length_[0]);
  return Grid(cells_[0] * factor, cells_[1] * factor, length_[0], length_[1]);
}

Field::Field(const Grid& grid, double fill)
    : grid_(grid), values_(Eigen::ArrayXd::Constant(grid.size(), fill)) {}

Field::Field(const Grid& grid, Eigen::ArrayXd values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument("field has " + std::to_string(values_.size()) +
                                " values but grid has " + std::to_string(grid_.size()) +
                                " cells");
}

double integrate(const Field& f) { return integrate(f.grid(), f.values()); }

double lp_norm(const Grid& grid, const Eigen::ArrayXd& values, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
  const Eigen::ArrayXd powered = values.unaryExpr([p](double x) { return pow_abs(x, p); });
  const double integral = integrate(grid, powered);
  return integral == 0.0 ? 0.0 : std::pow(integral, 1.0 / p);
}

double lp_norm(const Field& f, double p) { return lp_norm(f.grid(), f.values(), p); }

Eigen::ArrayXXd gradient(const Grid& grid, const Eigen::ArrayXd& f) {
  Eigen::ArrayXXd g = Eigen::ArrayXXd::Zero(grid.size(), grid.dim());
  const int nx = grid.cells(0);
  const int ny = grid.cells(1);
  if (nx > 1) {
    const double inv = 0.5 / grid.spacing(0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index k = grid.index(i, j);
        const double left = f(grid.index(std::max(i - 1, 0), j));
        const double right = f(grid.index(std::min(i + 1, nx - 1), j));
        g(k, 0) = (right - left) * inv;
      }
  }
  if (grid.dim() == 2 && ny > 1) {
    const double inv = 0.5 / grid.spacing(1);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index k = grid.index(i, j);
        const double down = f(grid.index(i, std::max(j - 1, 0)));
        const double up = f(grid.index(i, std::min(j + 1, ny - 1)));
        g(k, 1) = (up - down) * inv;
      }
  }
  return g;
}

Eigen::ArrayXXd gradient(const Field& f) { return gradient(f.grid(), f.values()); }

Eigen::ArrayXXd face_gradient(const Grid& grid, const Eigen::ArrayXd& f) {
  Eigen::ArrayXXd g = Eigen::ArrayXXd::Zero(grid.size(), grid.dim());
  const int nx = grid.cells(0);
  const int ny = grid.cells(1);
  const double inv_x = 1.0 / grid.spacing(0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const Eigen::Index k = grid.index(i, j);
      g(k, 0) = (f(k + 1) - f(k)) * inv_x;
    }
  if (grid.dim() == 2) {
    const double inv_y = 1.0 / grid.spacing(1);
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index k = grid.index(i, j);
        g(k, 1) = (f(k + nx) - f(k)) * inv_y;
      }
  }
  return g;
}

Eigen::ArrayXd laplacian(const Grid& grid, const Eigen::ArrayXd& f) {
  const Eigen::ArrayXXd flux = face_gradient(grid, f);
  Eigen::ArrayXd lap = Eigen::ArrayXd::Zero(grid.size());
  const int nx = grid.cells(0);
  const int ny = grid.cells(1);
  const double inv_x = 1.0 / grid.spacing(0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Eigen::Index k = grid.index(i, j);
      const double below = i > 0 ? flux(k - 1, 0) : 0.0;
      lap(k) += (flux(k, 0) - below) * inv_x;
    }
  if (grid.dim() == 2) {
    const double inv_y = 1.0 / grid.spacing(1);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index k = grid.index(i, j);
        const double below = j > 0 ? flux(k - nx, 1) : 0.0;
        lap(k) += (flux(k, 1) - below) * inv_y;
      }
  }
  return lap;
}

Field laplacian(const Field& f) {
  return Field(f.grid(), laplacian(f.grid(), f.values()));
}

Eigen::SparseMatrix<double> laplacian_matrix(const Grid& grid) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(grid.size()) * 5);
  const int nx = grid.cells(0);
  const int ny = grid.cells(1);
  auto couple = [&](Eigen::Index a, Eigen::Index b, double weight) {
    entries.emplace_back(a, b, weight);
    entries.emplace_back(b, a, weight);
    entries.emplace_back(a, a, -weight);
    entries.emplace_back(b, b, -weight);
  };
  const double wx = 1.0 / (grid.spacing(0) * grid.spacing(0));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) couple(grid.index(i, j), grid.index(i + 1, j), wx);
  if (grid.dim() == 2) {
    const double wy = 1.0 / (grid.spacing(1) * grid.spacing(1));
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i < nx; ++i) couple(grid.index(i, j), grid.index(i, j + 1), wy);
  }
  Eigen::SparseMatrix<double> m(grid.size(), grid.size());
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

double dirichlet_energy(const Grid& grid, const Eigen::ArrayXd& f) {
  return integrate(grid, face_gradient(grid, f).square().rowwise().sum());
}

Eigen::ArrayXd restrict_to(const Grid& coarse, const Grid& fine, const Eigen::ArrayXd& f) {
  if (coarse.dim() != fine.dim())
    throw std::invalid_argument("restrict_to: dimension mismatch");
  const int rx = fine.cells(0) / coarse.cells(0);
  const int ry = fine.cells(1) / coarse.cells(1);
  if (rx * coarse.cells(0) != fine.cells(0) || ry * coarse.cells(1) != fine.cells(1))
    throw std::invalid_argument("restrict_to: grids do not nest");
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(coarse.size());
  for (int j = 0; j < fine.cells(1); ++j)
    for (int i = 0; i < fine.cells(0); ++i)
      out(coarse.index(i / rx, j / ry)) += f(fine.index(i, j));
  return out / double(rx * ry);
}

ImplicitDiffusion::ImplicitDiffusion(const Grid& grid, double tolerance, int max_iterations)
    : laplacian_(laplacian_matrix(grid)),
      tolerance_(tolerance),
      max_iterations_(max_iterations) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("linear solver tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("linear solver needs at least one iteration");
}

void ImplicitDiffusion::set_tau(double tau) {
  if (tau == tau_) return;
  Eigen::SparseMatrix<double> identity(laplacian_.rows(), laplacian_.cols());
  identity.setIdentity();
  system_ = identity - tau * laplacian_;
  cg_.setTolerance(tolerance_);
  cg_.setMaxIterations(max_iterations_);
  cg_.compute(system_);
  tau_ = tau;
}

Eigen::ArrayXd ImplicitDiffusion::solve(const Eigen::ArrayXd& rhs, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("diffusion pseudo-time must be nonnegative");
  if (tau == 0.0 || laplacian_.nonZeros() == 0) {
    last_iterations_ = 0;
    return rhs;
  }
  set_tau(tau);
  const Eigen::VectorXd b = rhs.matrix();
  Eigen::VectorXd x = cg_.solveWithGuess(b, b);
  last_iterations_ = cg_.iterations();
  if (cg_.info() != Eigen::Success) throw LinearSolverFailure(cg_.iterations(), cg_.error());
  return x.array();
}

}  // namespace chemo
