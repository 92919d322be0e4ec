#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace folomin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Sorted list of 0-based row indices.
using IndexSet = std::vector<Index>;

/// Failure categories; the CLI maps each onto an exit code.
enum class ErrorKind {
  Usage,     // invalid arguments or configuration (exit 2)
  Data,      // malformed or out-of-domain input data (exit 3)
  Numerical  // degenerate fits, divergence, ill-conditioning (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

/// Latent scores Z (n x r) paired with the representation matrix A (q x r);
/// the natural parameter of cell (i, j) is theta_ij = a_j' z_i.
struct ParamPair {
  Matrix Z;
  Matrix A;

  Index n() const { return Z.rows(); }
  Index q() const { return A.rows(); }
  Index r() const { return A.cols(); }
  Matrix theta() const { return Z * A.transpose(); }
};

}  // namespace folomin
