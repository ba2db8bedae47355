#pragma once

#include <functional>
#include <string>

namespace tnirf {

using WarningSink = std::function<void(const std::string&)>;

// Non-fatal diagnostics (ill-conditioned solves, stationarity projections).
// Default sink writes to stderr; returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace tnirf
