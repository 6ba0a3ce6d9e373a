#pragma once

#include <stdexcept>
#include <string>

namespace folk {

// Maps onto the CLI exit codes: input = 2, convergence = 3, invariant = 4.
enum class ErrorKind { input, convergence, invariant };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void input_error(const std::string& what) { throw Error(ErrorKind::input, what); }
[[noreturn]] inline void invariant_error(const std::string& what) { throw Error(ErrorKind::invariant, what); }

}  // namespace folk
