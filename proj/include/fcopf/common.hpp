#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fcopf {

enum class ErrorKind {
  schema,      // malformed input document
  invariant,   // a domain invariant does not hold
  numerical,   // solver or integrator breakdown
  infeasible,  // no operating point satisfies the request
  mismatch,    // fingerprint / dimension mismatch between artifacts
  io,
  usage,
};

const char* to_string(ErrorKind kind);

/// Domain error. `where` is a field path or stage name ("lines[3].x",
/// "compare/dnnfcopf") and is prefixed to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& where, const std::string& what);

  ErrorKind kind() const { return kind_; }
  const std::string& where() const { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

/// Selects the OpenMP kernel or its serial reference. Both produce
/// identical results; the serial path exists for testing and benchmarks.
enum class Execution { serial, parallel };

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// FNV-1a, 64 bit, rendered as 16 hex digits.
std::string fingerprint_of(std::string_view bytes);

std::uint64_t splitmix64(std::uint64_t x);

/// Portable seeded generator. mt19937_64 is fully specified by the standard,
/// but the std distributions are not, so the draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();                         // [0, 1)
  double uniform(double lo, double hi);     // [lo, hi)
  std::size_t below(std::size_t n);         // [0, n)
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace fcopf
