#ifndef DACOMP_ERRORS_HPP
#define DACOMP_ERRORS_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dacomp {

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularMatrixError : std::runtime_error {
  SingularMatrixError(const std::string& what, Eigen::Index index)
      : std::runtime_error(what), eigenvalue_index(index) {}
  Eigen::Index eigenvalue_index;
};

struct RankError : std::runtime_error {
  RankError(const std::string& what, Eigen::Index achievable)
      : std::runtime_error(what), max_rank(achievable) {}
  Eigen::Index max_rank;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataGapError : std::runtime_error {
  DataGapError(const std::string& what, double time)
      : std::runtime_error(what), missing_time(time) {}
  double missing_time;
};

// Thrown by the iterative minimizer; carries the best iterate found.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, Eigen::VectorXd iterate,
                   double cost)
      : std::runtime_error(what), best_iterate(std::move(iterate)),
        best_cost(cost) {}
  Eigen::VectorXd best_iterate;
  double best_cost;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dacomp

#endif
