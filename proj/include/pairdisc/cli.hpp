#pragma once

#include <string>
#include <vector>

namespace pairdisc {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
int dispatch(const std::vector<std::string>& args);

}  // namespace pairdisc
