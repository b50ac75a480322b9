#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace eio {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thrown when a block that must be positive definite fails the pivot check.
class SingularBlockError : public std::runtime_error {
 public:
  explicit SingularBlockError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a parameter has mass on coordinates excluded by a truncation mask.
class InfeasibleParameterError : public std::runtime_error {
 public:
  explicit InfeasibleParameterError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on malformed configs, dimension mismatches, bad files.
class InvalidInputError : public std::runtime_error {
 public:
  explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

// Log levels selected via the EIO_LOG environment variable
// (quiet|info|debug, default info). Messages go to stderr.
enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);
void log_warn(const std::string& msg);

// Deterministic substream seeding: mixes a base seed with a stream id so that
// per-replicate generators are independent of each other and of scheduling
// order. SplitMix64 finalizer.
std::uint64_t substream_seed(std::uint64_t base_seed, std::uint64_t stream_id);

}  // namespace eio
