#pragma once

#include "json.hpp"

namespace nvis::internal {

// Insertion-ordered JSON whose floating point type is float, so values
// print with the shortest representation that round-trips a float32.
using Json = nlohmann::basic_json<nlohmann::ordered_map, std::vector, std::string,
                                  bool, std::int64_t, std::uint64_t, float>;

}  // namespace nvis::internal
