#pragma once

#include <cstdint>

#include "chemo/cli/config.hpp"
#include "chemo/model.hpp"

namespace chemo::cli {

/// Samples one profile on `grid`. Random profiles draw from `seed`.
Field make_field(const Grid& grid, const FieldSpec& spec, std::uint64_t seed);

/// Unregularized (u0, v0, w0) of a run on `grid`; each component uses its
/// own stream derived from config.seed.
InitialData make_base_data(const RunConfig& config, const Grid& grid);

}  // namespace chemo::cli
