#pragma once

#include <functional>
#include <string_view>

namespace stcov {

using WarningSink = std::function<void(std::string_view)>;

// Library warnings go through this sink. The default writes to stderr.
void set_warning_sink(WarningSink sink);
void log_warning(std::string_view message);

}  // namespace stcov
