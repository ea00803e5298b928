#include "sandkit/log.hpp"

#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace sandkit::log {
namespace {

spdlog::level::level_enum to_spdlog(Level l) {
  switch (l) {
    case Level::debug: return spdlog::level::debug;
    case Level::info: return spdlog::level::info;
    case Level::warn: return spdlog::level::warn;
    case Level::error: return spdlog::level::err;
  }
  return spdlog::level::warn;
}

std::mutex& logger_mutex() {
  static std::mutex m;
  return m;
}

std::shared_ptr<spdlog::logger> make_logger(spdlog::sink_ptr sink) {
  auto lg = std::make_shared<spdlog::logger>("sandkit", std::move(sink));
  lg->set_pattern("sandkit: %l: %v");
  lg->set_level(to_spdlog(level_from_env()));
  lg->flush_on(spdlog::level::debug);
  return lg;
}

std::shared_ptr<spdlog::logger>& logger() {
  static std::shared_ptr<spdlog::logger> lg =
      make_logger(std::make_shared<spdlog::sinks::stderr_sink_mt>());
  return lg;
}

std::shared_ptr<spdlog::logger> current() {
  std::lock_guard lock(logger_mutex());
  return logger();
}

}  // namespace

Level level_from_env() {
  const char* env = std::getenv("SANDKIT_LOG");
  if (env == nullptr) return Level::warn;
  const std::string v(env);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  if (v == "error") return Level::error;
  return Level::warn;
}

void redirect(std::ostream& os) {
  std::lock_guard lock(logger_mutex());
  const auto level = logger()->level();
  logger() = make_logger(std::make_shared<spdlog::sinks::ostream_sink_mt>(os, true));
  logger()->set_level(level);
}

void reset_to_stderr() {
  std::lock_guard lock(logger_mutex());
  const auto level = logger()->level();
  logger() = make_logger(std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger()->set_level(level);
}

void set_level(Level level) { current()->set_level(to_spdlog(level)); }

void debug(std::string_view msg) { current()->debug(msg); }
void info(std::string_view msg) { current()->info(msg); }
void warn(std::string_view msg) { current()->warn(msg); }
void error(std::string_view msg) { current()->error(msg); }

}  // namespace sandkit::log
