#pragma once

#include <memory>

#include "mmrag/gateway.hpp"

namespace mmrag::detail {

std::unique_ptr<Gateway> make_http_gateway(const GatewayConfig& cfg);

}  // namespace mmrag::detail
