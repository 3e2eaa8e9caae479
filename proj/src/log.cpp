#include "dsrsd/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace dsrsd {

namespace {
std::atomic<bool> g_warnings{true};
std::mutex g_log_mutex;
}  // namespace

void log_warning(std::string_view message) {
  if (!g_warnings.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled, std::memory_order_relaxed); }

}  // namespace dsrsd
