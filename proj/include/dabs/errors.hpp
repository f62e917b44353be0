#ifndef DABS_ERRORS_HPP_
#define DABS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dabs {

/* configuration / input validation problems -> exit code 1 */
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/* numeric failures (non-finite states, LP infeasibility, fit failures) -> exit code 2 */
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FitError : NumericError {
  explicit FitError(const std::string& msg) : NumericError(msg) {}
};

struct InfeasibleError : NumericError {
  double worst_residual;
  InfeasibleError(const std::string& msg, double residual)
      : NumericError(msg), worst_residual(residual) {}
};

/* empty winning set where one was required -> exit code 3 */
struct SynthesisEmptyError : std::runtime_error {
  explicit SynthesisEmptyError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dabs

#endif
