#include "fsaudit/serial.hpp"

#include <cstring>

#include "fsaudit/errors.hpp"

namespace fsaudit {

namespace {
constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

std::string base64_encode(const std::vector<float>& data) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    const std::size_t n = data.size() * sizeof(float);
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (i + 1 < n) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (i + 2 < n) chunk |= static_cast<std::uint32_t>(bytes[i + 2]);
        out.push_back(kAlphabet[(chunk >> 18) & 63]);
        out.push_back(kAlphabet[(chunk >> 12) & 63]);
        out.push_back(i + 1 < n ? kAlphabet[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < n ? kAlphabet[chunk & 63] : '=');
    }
    return out;
}

std::vector<float> base64_decode_floats(const std::string& text) {
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    std::uint32_t chunk = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = decode_char(c);
        if (v < 0) throw CheckpointError("invalid base64 character in parameter blob");
        chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            bytes.push_back(static_cast<unsigned char>((chunk >> bits) & 0xff));
        }
    }
    if (bytes.size() % sizeof(float) != 0)
        throw CheckpointError("parameter blob is not a whole number of float32 values");
    std::vector<float> out(bytes.size() / sizeof(float));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

}  // namespace fsaudit
