#pragma once

#include <stdexcept>
#include <string>

namespace psz {

enum class ErrorKind { invalid_argument, config, budget, check_failure, internal };

// Single exception type; the kind maps onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::invalid_argument, what);
}

inline void ensure(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::internal, what);
}

}  // namespace psz
