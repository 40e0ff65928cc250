#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ssgan {

// Error taxonomy used across the library. `shape`, `domain` and `value`
// cover precondition violations; `io`, `parse` and `state` cover runtime
// failures (bad files, corrupt checkpoints, misused objects).
class Error : public std::runtime_error {
 public:
  enum class Kind { shape, domain, value, io, parse, state };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

  // Validation errors map to CLI exit code 1, runtime failures to 2.
  bool is_validation() const {
    return kind_ == Kind::shape || kind_ == Kind::domain || kind_ == Kind::value ||
           kind_ == Kind::parse;
  }

 private:
  Kind kind_;
};

namespace detail {

inline void str_cat(std::ostringstream&) {}

template <typename A, typename... Rest>
void str_cat(std::ostringstream& os, const A& a, const Rest&... rest) {
  os << a;
  str_cat(os, rest...);
}

}  // namespace detail

template <typename... Args>
std::string str(const Args&... args) {
  std::ostringstream os;
  detail::str_cat(os, args...);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(Error::Kind kind, const Args&... args) {
  throw Error(kind, str(args...));
}

template <typename... Args>
void check(bool cond, Error::Kind kind, const Args&... args) {
  if (!cond) fail(kind, args...);
}

}  // namespace ssgan
