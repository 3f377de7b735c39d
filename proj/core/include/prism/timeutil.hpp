#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace prism {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Clock = std::function<Timestamp()>;

Timestamp now_utc();

/// Clock that always returns the same instant (deterministic test mode).
Clock fixed_clock(Timestamp at);

/// "2026-10-15T10:56:00.000Z"
std::string format_timestamp(Timestamp t);

/// Parses the format produced by format_timestamp; the fraction is optional.
Timestamp parse_timestamp(std::string_view text);

}  // namespace prism
