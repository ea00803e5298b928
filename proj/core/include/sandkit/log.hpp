#pragma once

#include <ostream>
#include <string_view>

namespace sandkit::log {

enum class Level { debug, info, warn, error };

// Level is read once from SANDKIT_LOG={error,warn,info,debug}; default warn.
Level level_from_env();

// Redirects diagnostics to `os` (default: stderr). The stream must outlive
// all subsequent logging calls.
void redirect(std::ostream& os);
void reset_to_stderr();
void set_level(Level level);

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

}  // namespace sandkit::log
