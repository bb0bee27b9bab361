#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace unmixlab {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull);

// FNV-1a of the compact dump (object keys sorted), as 16 hex digits.
std::string json_hash(const nlohmann::json& j);

}  // namespace unmixlab
