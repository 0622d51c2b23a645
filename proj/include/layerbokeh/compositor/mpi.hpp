#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "layerbokeh/core/image.hpp"

namespace layerbokeh::compositor {

/// One fronto-parallel RGBA plane.
struct MpiPlane {
  ImageBuffer color;           // 3 channels, linear
  Mask alpha;
  std::optional<Mask> blend;   // background blend weight, diagnostics only
  double disparity = 0.0;
};

/// Center disparity of plane `index` (0-based) in an N-plane stack:
/// (index + 0.5) / N.
double plane_disparity(int index, int plane_count);

/// Back-to-front ordered planes at disparities (i + 0.5) / N.
class MpiStack {
 public:
  /// Throws InvalidArgument if the planes break the stack invariants.
  explicit MpiStack(std::vector<MpiPlane> planes);

  int size() const { return static_cast<int>(planes_.size()); }
  int width() const { return planes_.front().alpha.width(); }
  int height() const { return planes_.front().alpha.height(); }
  const std::vector<MpiPlane>& planes() const { return planes_; }
  const MpiPlane& plane(int i) const { return planes_.at(i); }

 private:
  std::vector<MpiPlane> planes_;
};

/// Debug dump: plane_XX_color.png (16-bit linear RGB), plane_XX_alpha.png
/// (16-bit), optional plane_XX_blend.png, and index.json listing d_i.
void save_stack(const MpiStack& stack, const std::filesystem::path& dir);
MpiStack load_stack(const std::filesystem::path& dir);

}  // namespace layerbokeh::compositor
