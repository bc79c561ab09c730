#pragma once

// Internal: weight-file JSON encoding shared by the net, FKD and IKD
// serializers.

#include <cstdint>

#include <json.hpp>

#include "optimfkd/net.hpp"

namespace optimfkd {

nlohmann::json net_to_json(const NetParams& params, std::uint64_t seed);
NetParams net_from_json(const nlohmann::json& j);

}  // namespace optimfkd
