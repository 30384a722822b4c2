#include "lbc/log.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>

namespace lbc::log {

namespace {

std::mutex mu;
std::ofstream file;
bool quiet = false;

std::string stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void info(std::string_view message) {
  std::lock_guard<std::mutex> lock(mu);
  if (!quiet) std::clog << "[lbc] " << message << '\n';
  if (file.is_open()) file << stamp() << ' ' << message << '\n' << std::flush;
}

void open_file(const std::string& path) {
  std::lock_guard<std::mutex> lock(mu);
  if (file.is_open()) file.close();
  file.open(path, std::ios::app);
}

void close_file() {
  std::lock_guard<std::mutex> lock(mu);
  if (file.is_open()) file.close();
}

void set_quiet(bool q) {
  std::lock_guard<std::mutex> lock(mu);
  quiet = q;
}

}  // namespace lbc::log
