#pragma once

#include <string>
#include <string_view>

namespace lbc::log {

/// Progress lines go to stderr so CSV/JSON on stdout stays clean. Thread safe.
void info(std::string_view message);

/// Also append every line, prefixed with a wall-clock timestamp, to `path`.
void open_file(const std::string& path);
void close_file();

/// Silences stderr output (the file sink, if any, still receives lines).
void set_quiet(bool quiet);

}  // namespace lbc::log
