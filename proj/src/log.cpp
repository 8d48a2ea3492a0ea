#include "provnet/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace provnet::log {

namespace {

void stderr_sink(Level level, std::string_view message) {
    std::cerr << (level == Level::warn ? "[provnet] warning: " : "[provnet] ") << message << '\n';
}

std::mutex sink_mutex;
Sink current_sink = stderr_sink;

void emit(Level level, std::string_view message) {
    std::lock_guard lock(sink_mutex);
    if (current_sink) current_sink(level, message);
}

} // namespace

Sink set_sink(Sink sink) {
    std::lock_guard lock(sink_mutex);
    return std::exchange(current_sink, std::move(sink));
}

void info(std::string_view message) { emit(Level::info, message); }
void warn(std::string_view message) { emit(Level::warn, message); }

} // namespace provnet::log
