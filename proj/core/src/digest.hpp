#pragma once

#include <array>
#include <cstdint>

#include "onionkep/bytes.hpp"

namespace onionkep::detail {

std::array<std::uint8_t, 32> sha256(ByteView data);

}  // namespace onionkep::detail
