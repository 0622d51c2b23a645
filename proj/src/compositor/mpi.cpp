#include "layerbokeh/compositor/mpi.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"

namespace layerbokeh::compositor {

using nlohmann::json;

double plane_disparity(int index, int plane_count) {
  return (index + 0.5) / plane_count;
}

MpiStack::MpiStack(std::vector<MpiPlane> planes) : planes_(std::move(planes)) {
  if (planes_.size() < 2) throw InvalidArgument("an MPI needs >= 2 planes");
  const int n = size();
  const int w = planes_.front().alpha.width();
  const int h = planes_.front().alpha.height();
  for (int i = 0; i < n; ++i) {
    const MpiPlane& p = planes_[i];
    const std::string where = "plane " + std::to_string(i);
    if (p.color.channels() != 3 || p.color.space() != ColorSpace::kLinear) {
      throw InvalidArgument(where + ": color must be 3-channel linear");
    }
    if (!p.color.same_size(w, h) || !p.alpha.same_size(p.color) ||
        (p.blend && !p.blend->same_size(p.color))) {
      throw InvalidArgument(where + ": dimension mismatch");
    }
    if (std::abs(p.disparity - plane_disparity(i, n)) > 1e-9) {
      throw InvalidArgument(where + ": disparity must be (i + 0.5) / N");
    }
  }
}

namespace {

std::string plane_file(int i, const char* kind) {
  char name[48];
  std::snprintf(name, sizeof(name), "plane_%02d_%s.png", i, kind);
  return name;
}

}  // namespace

void save_stack(const MpiStack& stack, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json planes = json::array();
  for (int i = 0; i < stack.size(); ++i) {
    const MpiPlane& p = stack.plane(i);
    json entry{{"index", i + 1},
               {"disparity", p.disparity},
               {"color", plane_file(i, "color")},
               {"alpha", plane_file(i, "alpha")}};
    save_image(p.color, dir / plane_file(i, "color"), 16);
    save_image(ImageBuffer(p.alpha.width(), p.alpha.height(), 1,
                           ColorSpace::kLinear, p.alpha.to_vector()),
               dir / plane_file(i, "alpha"), 16);
    if (p.blend) {
      entry["blend"] = plane_file(i, "blend");
      save_image(ImageBuffer(p.blend->width(), p.blend->height(), 1,
                             ColorSpace::kLinear, p.blend->to_vector()),
                 dir / plane_file(i, "blend"), 16);
    }
    planes.push_back(std::move(entry));
  }
  const json index{{"version", 1},
                   {"plane_count", stack.size()},
                   {"width", stack.width()},
                   {"height", stack.height()},
                   {"color_space", "linear"},
                   {"planes", planes}};
  const std::string text = index.dump(2) + "\n";
  write_file_atomic(dir / "index.json",
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

MpiStack load_stack(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw IoError("cannot open " + (dir / "index.json").string());
  json index;
  try {
    index = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("index.json: " + std::string(e.what()));
  }
  if (!index.contains("planes") || !index["planes"].is_array()) {
    throw ParseError("index.json: planes: expected an array");
  }
  std::vector<MpiPlane> planes;
  const auto& entries = index["planes"];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const json& e = entries[i];
    const std::string where = "planes[" + std::to_string(i) + "]";
    for (const char* key : {"color", "alpha", "disparity"}) {
      if (!e.contains(key)) throw ParseError(where + "." + key + ": missing");
    }
    ImageBuffer color = load_image(dir / e["color"].get<std::string>())
                            .with_space(ColorSpace::kLinear);
    Mask alpha = load_mask(dir / e["alpha"].get<std::string>());
    std::optional<Mask> blend;
    if (e.contains("blend")) blend = load_mask(dir / e["blend"].get<std::string>());
    // Stored d_i is informational; the plane index defines it exactly.
    planes.push_back(MpiPlane{
        std::move(color), std::move(alpha), std::move(blend),
        plane_disparity(static_cast<int>(i), static_cast<int>(entries.size()))});
  }
  return MpiStack(std::move(planes));
}

}  // namespace layerbokeh::compositor
