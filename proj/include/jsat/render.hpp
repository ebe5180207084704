#pragma once

#include <filesystem>
#include <string>

#include "jsat/io.hpp"
#include "jsat/types.hpp"

namespace jsat {

struct RenderOptions {
  std::string colormap = "auto";  ///< auto | viridis | coolwarm
  int cell_px = 4;                ///< pixels per matrix cell
};

/// Renders a matrix CSV to a PNG heatmap with nm axis labels and writes a
/// sidecar JSON (<out>.json) with the value range and colormap, so renders are
/// reproducible. "auto" picks the diverging map when values straddle zero.
void render_heatmap(const MatrixCsv& matrix, const std::filesystem::path& out_png,
                    const RenderOptions& options = RenderOptions{});

}  // namespace jsat
