#pragma once

#include <string>

#include "abrlab/policy_net.hpp"

namespace abrlab {

/// .cmy layout: 8-byte magic "ABRLCMY\0", u32 format version, u64 header
/// length, UTF-8 JSON header (config, format version, step count, tensor
/// names and shapes), then for each tensor — parameters, then first and
/// second Adam moments — a u32 rank, u64 dims and little-endian f64 data.
inline constexpr unsigned kModelFormatVersion = 1;

std::string serialize_model(const PolicyNetwork &net);
/// Throws DataError on a malformed or incompatible container.
PolicyNetwork parse_model(const std::string &bytes);

void save_model(const PolicyNetwork &net, const std::string &path);
PolicyNetwork load_model(const std::string &path);

}  // namespace abrlab
