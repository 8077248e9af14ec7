#ifndef ALSET_ERRORS_HPP
#define ALSET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace alset
{

struct domain_error : std::domain_error
{
  using std::domain_error::domain_error;
};

struct unsupported_operation : std::logic_error
{
  using std::logic_error::logic_error;
};

/// Raised when a linear system in the lower Hessian cannot be solved,
/// which means strong convexity of the lower level is violated.
struct linear_solver_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct precondition_violation : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

} // namespace alset

#endif
