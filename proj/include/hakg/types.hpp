#pragma once

#include <cstdint>

namespace hakg {

using EntityId = std::uint32_t;    // dense KG entity index
using TypeId = std::uint32_t;      // entity type index
using RelationId = std::uint32_t;  // link (relation) type index

}  // namespace hakg
