#include "adacgp/logging.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace adacgp::log {
namespace {

std::atomic<int> g_level{static_cast<int>(Level::Warning)};
std::atomic<long> g_warnings{0};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, const std::string& msg) {
  if (static_cast<int>(lvl) < g_level.load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[adacgp " << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level lvl) { g_level.store(static_cast<int>(lvl)); }
Level level() { return static_cast<Level>(g_level.load()); }

void debug(const std::string& msg) { emit(Level::Debug, "debug", msg); }
void info(const std::string& msg) { emit(Level::Info, "info", msg); }
void warn(const std::string& msg) {
  ++g_warnings;
  emit(Level::Warning, "warn", msg);
}
void error(const std::string& msg) { emit(Level::Error, "error", msg); }

long warning_count() { return g_warnings.load(); }
void reset_warning_count() { g_warnings.store(0); }

}  // namespace adacgp::log
