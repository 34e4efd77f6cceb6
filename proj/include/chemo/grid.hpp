#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

namespace chemo {

/// Rectangular cell-centered mesh on [0, L_x] (x [0, L_y]).
///
/// Cells are numbered with the x index running fastest. Boundaries are
/// homogeneous Neumann: every operator mirrors the boundary cell into its
/// ghost, so zero-flux conditions and discrete mass identities hold exactly.
class Grid {
 public:
  Grid(int cells_x, double length_x);
  Grid(int cells_x, int cells_y, double length_x, double length_y);

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  double length(int axis) const { return length_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }

  Eigen::Index size() const {
    return Eigen::Index(cells_[0]) * Eigen::Index(cells_[1]);
  }
  double cell_volume() const { return spacing_[0] * spacing_[1]; }
  double measure() const { return length_[0] * length_[1]; }
  double min_spacing() const;
  double max_spacing() const;
  double diameter() const;

  Eigen::Index index(int i, int j = 0) const {
    return Eigen::Index(i) + Eigen::Index(cells_[0]) * j;
  }
  double center(int axis, int i) const { return (i + 0.5) * spacing_[axis]; }

  /// Same domain with `factor` times fewer cells per axis.
  Grid coarsened(int factor) const;
  /// Same domain with `factor` times more cells per axis.
  Grid refined(int factor) const;

  bool operator==(const Grid& other) const = default;

 private:
  int dim_;
  // Unused trailing axis of a 1D grid is a single cell of unit length, so
  // products over both axes give the 1D volume and measure.
  std::array<int, 2> cells_{1, 1};
  std::array<double, 2> length_{1.0, 1.0};
  std::array<double, 2> spacing_{1.0, 1.0};
};

/// Per-cell real values on a grid.
class Field {
 public:
  explicit Field(const Grid& grid, double fill = 0.0);
  Field(const Grid& grid, Eigen::ArrayXd values);

  /// Samples `fn(x, y)` at cell centers (y = 0 on 1D grids).
  template <typename Fn>
  static Field sample(const Grid& grid, Fn&& fn) {
    Eigen::ArrayXd values(grid.size());
    for (int j = 0; j < grid.cells(1); ++j) {
      const double y = grid.dim() == 2 ? grid.center(1, j) : 0.0;
      for (int i = 0; i < grid.cells(0); ++i)
        values(grid.index(i, j)) = fn(grid.center(0, i), y);
    }
    return Field(grid, std::move(values));
  }

  const Grid& grid() const { return grid_; }
  const Eigen::ArrayXd& values() const { return values_; }
  Eigen::ArrayXd& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index k) const { return values_(k); }
  double operator()(int i, int j = 0) const { return values_(grid_.index(i, j)); }

 private:
  Grid grid_;
  Eigen::ArrayXd values_;
};

class NonFiniteValue : public std::domain_error {
 public:
  explicit NonFiniteValue(Eigen::Index cell)
      : std::domain_error("non-finite value at cell " + std::to_string(cell)),
        cell_(cell) {}
  Eigen::Index cell() const { return cell_; }

 private:
  Eigen::Index cell_;
};

/// Midpoint quadrature of cellwise values over the domain.
template <typename Derived>
double integrate(const Grid& grid, const Eigen::ArrayBase<Derived>& values) {
  const Eigen::ArrayXd v = values;
  if (!v.allFinite()) {
    for (Eigen::Index k = 0; k < v.size(); ++k)
      if (!std::isfinite(v(k))) throw NonFiniteValue(k);
  }
  return v.sum() * grid.cell_volume();
}

double integrate(const Field& f);

/// |x|^p with 0^p := 0.
inline double pow_abs(double x, double p) {
  const double a = std::abs(x);
  return a == 0.0 ? 0.0 : std::pow(a, p);
}

double lp_norm(const Field& f, double p);
double lp_norm(const Grid& grid, const Eigen::ArrayXd& values, double p);

/// Centered differences at cell centers, one column per axis. Ghost cells
/// mirror the boundary cell; an axis with a single cell has zero gradient.
Eigen::ArrayXXd gradient(const Grid& grid, const Eigen::ArrayXd& f);
Eigen::ArrayXXd gradient(const Field& f);

/// Face differences, one column per axis: entry k of column a is
/// (f[k + e_a] - f[k]) / h_a on the face at the upper side of cell k along
/// axis a, and 0 on the boundary face.
Eigen::ArrayXXd face_gradient(const Grid& grid, const Eigen::ArrayXd& f);

/// Five-point (three-point in 1D) Laplacian with mirrored ghosts.
Eigen::ArrayXd laplacian(const Grid& grid, const Eigen::ArrayXd& f);
Field laplacian(const Field& f);

/// The matrix of `laplacian`, symmetric with zero row sums.
Eigen::SparseMatrix<double> laplacian_matrix(const Grid& grid);

/// Discrete Dirichlet energy: integral of |grad f|^2 summed over interior faces.
double dirichlet_energy(const Grid& grid, const Eigen::ArrayXd& f);

/// Averages a field on `fine` onto `coarse`, whose cells must nest.
Eigen::ArrayXd restrict_to(const Grid& coarse, const Grid& fine,
                           const Eigen::ArrayXd& f);

class LinearSolverFailure : public std::runtime_error {
 public:
  LinearSolverFailure(Eigen::Index iterations, double error)
      : std::runtime_error("linear solver did not converge after " +
                           std::to_string(iterations) + " iterations (residual " +
                           std::to_string(error) + ")"),
        iterations_(iterations) {}
  Eigen::Index iterations() const { return iterations_; }

 private:
  Eigen::Index iterations_;
};

/// Solves (I - tau * Laplacian) x = b by conjugate gradients. The operator is
/// a symmetric M-matrix, so x >= 0 whenever b >= 0 and the integral of x
/// equals the integral of b.
class ImplicitDiffusion {
 public:
  ImplicitDiffusion(const Grid& grid, double tolerance, int max_iterations);

  Eigen::ArrayXd solve(const Eigen::ArrayXd& rhs, double tau);
  Eigen::Index last_iterations() const { return last_iterations_; }

 private:
  void set_tau(double tau);

  Eigen::SparseMatrix<double> laplacian_;
  Eigen::SparseMatrix<double> system_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>
      cg_;
  double tau_ = -1.0;
  double tolerance_;
  int max_iterations_;
  Eigen::Index last_iterations_ = 0;
};

}  // namespace chemo
