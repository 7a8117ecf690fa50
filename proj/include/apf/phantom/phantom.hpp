#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "apf/core/affine.hpp"
#include "apf/core/box.hpp"
#include "apf/core/mask.hpp"
#include "apf/eval/categorize.hpp"
#include "apf/filter/detection.hpp"
#include "apf/filter/filter.hpp"

namespace apf::phantom {

struct Ellipsoid {
  Vec3 center_mm{};
  Vec3 radii_mm{};
};

/// Polyline vessel; a voxel belongs to the tube when its centre lies within
/// radius_mm of any segment.
struct Tube {
  std::vector<Vec3> points_mm;
  double radius_mm = 1.0;
};

/// What a planted detection is meant to look like to the filters.
enum class PlantedTag {
  Extracranial,    // no brain overlap, no vessels
  Venous,          // vein-dominant, inside the brain
  Tie,             // equal vein and artery overlap
  Arterial,        // artery only
  Cvs,             // vein inside the CVS region only
  Nonvascular,     // brain tissue, no vessels
  Aneurysm,        // ground truth on an artery, no vein contact
  AneurysmVeinTouching,  // ground truth with artery >= vein >= 1 outside the CVS region
  AneurysmCvsAdjacent,   // ground truth whose only vein contact is CVS
};

std::string tag_name(PlantedTag tag);
PlantedTag parse_tag(std::string_view name);
bool is_ground_truth_tag(PlantedTag tag) noexcept;

/// Methods expected to remove a detection planted with `tag`.
std::set<filter::Method> expected_removals(PlantedTag tag);
/// Category categorize_fp should assign (nullopt for ground-truth tags).
std::optional<eval::FpCategory> expected_category(PlantedTag tag);

struct PlantedBox {
  std::string name;
  WorldBox box_mm;
  PlantedTag tag;
};

struct PhantomSpec {
  Index3 dims{64, 64, 64};
  Vec3 spacing_mm{1.0, 1.0, 1.0};
  Vec3 origin_mm{0.0, 0.0, 0.0};
  Ellipsoid brain;
  std::vector<Tube> arteries;
  std::vector<Tube> veins;
  /// CVS region in template space, and the template-to-target transform.
  WorldBox template_cvs_box{{0, 0, 0}, {0, 0, 0}};
  Affine4 template_to_target = Affine4::identity();
  /// Margins the downstream pipeline will use; realizability is checked against them.
  double brain_margin_mm = 3.6;
  double cvs_expand_mm = 3.2;
  std::vector<PlantedBox> aneurysms;
  std::vector<PlantedBox> decoys;
  double decoy_confidence_min = 0.5;
  double decoy_confidence_max = 1.0;
  double aneurysm_confidence_min = 0.85;
  double aneurysm_confidence_max = 1.0;
};

enum class PhantomVariant { Base, VeinTouchingAneurysm };

/// 64^3 grid at 1 mm with one decoy of every tag and three aneurysms
/// (one next to the CVS). `layout_seed` shifts the whole anatomy by a few
/// millimetres so repeated cases differ in position.
PhantomSpec default_phantom_spec(PhantomVariant variant = PhantomVariant::Base, std::uint64_t layout_seed = 0);

/// Default layout scaled onto an arbitrary grid (used for large performance runs).
PhantomSpec scaled_phantom_spec(const Index3 &dims, const Vec3 &spacing_mm);

struct PhantomCase {
  Geometry geometry;
  BinaryMask brain_seg;
  BinaryMask artery;
  BinaryMask vein;
  WorldBox template_cvs_box;
  Affine4 template_to_target;
  std::vector<Detection> detections;
  std::vector<GroundTruthBox> ground_truth;
  std::map<std::string, PlantedTag> planted;  // detection id -> tag
};

/// Rasterize and plant. Confidences come from `seed`; identical (spec, seed)
/// produce identical cases. Throws ValidationError when the spec is not
/// realizable (vessel outside the grid, a planted box that does not show
/// the overlap pattern its tag promises, ...).
PhantomCase generate_phantom(const PhantomSpec &spec, std::uint64_t seed);

} // namespace apf::phantom
