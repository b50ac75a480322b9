#include "eio/common.hpp"

#include <cstring>

namespace eio {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("EIO_LOG");
    if (env == nullptr) return LogLevel::Info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::fprintf(stderr, "[eio] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::fprintf(stderr, "[eio:debug] %s\n", msg.c_str());
}

void log_warn(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::fprintf(stderr, "[eio:warn] %s\n", msg.c_str());
}

std::uint64_t substream_seed(std::uint64_t base_seed, std::uint64_t stream_id) {
  // SplitMix64 step applied to base ^ golden-ratio-scrambled id.
  std::uint64_t x = base_seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace eio
