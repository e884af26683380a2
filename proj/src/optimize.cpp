#include "hsq/optimize.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace hsq {

namespace {

struct Objective {
  const std::function<double(const RealVector&)>* f;
  int evals = 0;
  RealVector scratch;
};

double trampoline(const gsl_vector* v, void* params) {
  auto* obj = static_cast<Objective*>(params);
  for (Eigen::Index i = 0; i < obj->scratch.size(); ++i) obj->scratch(i) = gsl_vector_get(v, static_cast<std::size_t>(i));
  ++obj->evals;
  const double y = (*obj->f)(obj->scratch);
  return std::isfinite(y) ? y : std::numeric_limits<double>::max();
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace

SimplexResult nelder_mead(const std::function<double(const RealVector&)>& f, const RealVector& x0,
                          const SimplexOptions& opts) {
  const auto n = static_cast<std::size_t>(x0.size());
  SimplexResult res;
  if (n == 0) {
    res.x = x0;
    res.value = f(x0);
    res.evals = 1;
    res.converged = true;
    return res;
  }
  gsl_set_error_handler_off();

  Objective obj{&f, 0, RealVector(x0.size())};
  gsl_multimin_function fn{&trampoline, n, &obj};
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0(static_cast<Eigen::Index>(i)));
  gsl_vector_set_all(step.get(), opts.initial_step);
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  if (gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) {
    throw std::runtime_error("nelder_mead: could not initialize the simplex");
  }

  std::vector<double> history;
  while (obj.evals < opts.max_evals) {
    const int status = gsl_multimin_fminimizer_iterate(m.get());
    ++res.iterations;
    history.push_back(m->fval);
    if (status != GSL_SUCCESS) {
      res.converged = true;
      break;
    }
    if (gsl_multimin_fminimizer_size(m.get()) < 1e-10) {
      res.converged = true;
      break;
    }
    const auto w = static_cast<std::size_t>(opts.window) * n;
    if (history.size() > w && history[history.size() - 1 - w] - history.back() < opts.tol) {
      res.converged = true;
      break;
    }
  }

  res.x.resize(x0.size());
  for (std::size_t i = 0; i < n; ++i) res.x(static_cast<Eigen::Index>(i)) = gsl_vector_get(m->x, i);
  res.value = m->fval;
  res.evals = obj.evals;
  return res;
}

// ---------------------------------------------------------------------------

Matrix complete_to_unitary(const Matrix& isometry) {
  const Eigen::Index m = isometry.rows(), r = isometry.cols();
  if (r > m) throw std::invalid_argument("isometry has more columns than rows");
  if ((isometry.adjoint() * isometry - Matrix::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("columns are not orthonormal");
  }
  Matrix q = Eigen::HouseholderQR<Matrix>(isometry).householderQ();
  Matrix u(m, m);
  u.leftCols(r) = isometry;
  u.rightCols(m - r) = q.rightCols(m - r);
  return u;
}

StiefelChart::StiefelChart(const Matrix& seed)
    : base_(complete_to_unitary(seed)), r_(static_cast<int>(seed.cols())) {}

int StiefelChart::n_params() const {
  const int m = rows();
  return r_ * r_ + 2 * r_ * (m - r_);
}

Matrix StiefelChart::generator(const RealVector& theta) const {
  if (theta.size() != n_params()) throw std::invalid_argument("wrong number of chart parameters");
  const int m = rows();
  Matrix g = Matrix::Zero(m, m);
  Eigen::Index p = 0;
  for (int i = 0; i < r_; ++i) g(i, i) = cplx(0.0, theta(p++));
  for (int i = 0; i < r_; ++i) {
    for (int j = i + 1; j < r_; ++j) {
      const cplx z(theta(p), theta(p + 1));
      p += 2;
      g(i, j) = z;
      g(j, i) = -std::conj(z);
    }
  }
  for (int i = r_; i < m; ++i) {
    for (int j = 0; j < r_; ++j) {
      const cplx z(theta(p), theta(p + 1));
      p += 2;
      g(i, j) = z;
      g(j, i) = -std::conj(z);
    }
  }
  return g;
}

Matrix StiefelChart::at(const RealVector& theta) const {
  const Matrix u = generator(theta).exp();
  return base_ * u.leftCols(r_);
}

void StiefelChart::recenter(const RealVector& theta) {
  const Matrix u = generator(theta).exp();
  base_ = base_ * u;
}

}  // namespace hsq
