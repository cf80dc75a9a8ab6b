#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsaudit {

// base64 for float32 parameter blobs inside JSON checkpoints.
std::string base64_encode(const std::vector<float>& data);
std::vector<float> base64_decode_floats(const std::string& text);

}  // namespace fsaudit
