#pragma once

#include <map>
#include <string>
#include <string_view>

namespace cadence::detail {

const std::map<std::string, std::string>& builtin_prompt_assets();
std::string_view builtin_prompt_locale();

}  // namespace cadence::detail
