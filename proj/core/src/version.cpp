#include "airsparse/version.hpp"

#include <fftw3.h>
#include <png.h>

namespace airsparse {

const char* version() { return AIRSPARSE_VERSION; }

std::vector<std::pair<std::string, std::string>> component_versions() {
  return {{"airsparse", AIRSPARSE_VERSION}, {"fftw", fftw_version}, {"libpng", PNG_LIBPNG_VER_STRING}};
}

}  // namespace airsparse
