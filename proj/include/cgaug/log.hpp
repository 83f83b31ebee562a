#pragma once

#include <functional>
#include <string_view>

namespace cgaug {

// Warnings go to stderr unless a sink is installed (tests capture them).
using LogSink = std::function<void(std::string_view)>;

void set_warning_sink(LogSink sink);
void warn(std::string_view message);
void info(std::string_view message);

}  // namespace cgaug
