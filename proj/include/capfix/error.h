#ifndef CAPFIX_ERROR_H_
#define CAPFIX_ERROR_H_

#include <stdexcept>
#include <string>

namespace capfix {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input file or record that does not match its declared schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during optimisation.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace capfix

#endif  // CAPFIX_ERROR_H_
