#pragma once

// Model file: "ZGGPMDL1", u8 architecture tag (0 attention, 1 conv), the
// config fields as u32 in declaration order, then every parameter tensor as
// (u16 name length, name, u8 rank, u32 dims..., f32 values...). All
// little-endian.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "zggp/neural/value_net.hpp"

namespace zggp {

void serialize_model(const ValueNet& net, std::ostream& out);
std::vector<std::uint8_t> serialize_model(const ValueNet& net);

// Throws CorruptModel on bad magic, truncation, trailing bytes, or any
// name/shape disagreement with the layout implied by the config.
ValueNet deserialize_model(std::istream& in);
ValueNet deserialize_model(const std::vector<std::uint8_t>& bytes);

// Throws IoFailure when the file cannot be opened or written.
void save_model(const ValueNet& net, const std::string& path);
ValueNet load_model(const std::string& path);

}  // namespace zggp
