#pragma once

#include <string>
#include <utility>
#include <vector>

namespace airsparse {

const char* version();

/// (component, version) pairs for this library and the numeric and image
/// libraries it was linked against.
std::vector<std::pair<std::string, std::string>> component_versions();

}  // namespace airsparse
