#include "cgaug/log.hpp"

#include <iostream>
#include <mutex>
#include <string>

namespace cgaug {

namespace {
std::mutex g_mutex;
LogSink g_sink;
}  // namespace

void set_warning_sink(LogSink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

void info(std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::cerr << message << '\n';
}

}  // namespace cgaug
