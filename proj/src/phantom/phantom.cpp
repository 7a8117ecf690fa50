#include "apf/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "apf/core/errors.hpp"
#include "apf/core/morphology.hpp"
#include "apf/phantom/oracles.hpp"

namespace apf::phantom {

namespace {

struct TagInfo {
  PlantedTag tag;
  const char *name;
};

constexpr TagInfo kTags[] = {
    {PlantedTag::Extracranial, "extracranial"},
    {PlantedTag::Venous, "venous"},
    {PlantedTag::Tie, "tie"},
    {PlantedTag::Arterial, "arterial"},
    {PlantedTag::Cvs, "cvs"},
    {PlantedTag::Nonvascular, "nonvascular"},
    {PlantedTag::Aneurysm, "aneurysm"},
    {PlantedTag::AneurysmVeinTouching, "aneurysm_vein_touching"},
    {PlantedTag::AneurysmCvsAdjacent, "aneurysm_cvs_adjacent"},
};

} // namespace

std::string tag_name(PlantedTag tag) {
  for (const auto &t : kTags)
    if (t.tag == tag)
      return t.name;
  return "unknown";
}

PlantedTag parse_tag(std::string_view name) {
  for (const auto &t : kTags)
    if (name == t.name)
      return t.tag;
  throw InvalidArgument(fmt::format("unknown planted tag '{}'", name));
}

bool is_ground_truth_tag(PlantedTag tag) noexcept {
  return tag == PlantedTag::Aneurysm || tag == PlantedTag::AneurysmVeinTouching ||
         tag == PlantedTag::AneurysmCvsAdjacent;
}

std::set<filter::Method> expected_removals(PlantedTag tag) {
  using filter::Method;
  switch (tag) {
  case PlantedTag::Extracranial:
    return {Method::M1, Method::M4, Method::M5};
  case PlantedTag::Venous:
    return {Method::M2, Method::M3, Method::M4, Method::M5};
  case PlantedTag::Tie:
  case PlantedTag::AneurysmVeinTouching:
    return {Method::M2, Method::M4};
  case PlantedTag::Arterial:
  case PlantedTag::Cvs:
  case PlantedTag::Nonvascular:
  case PlantedTag::Aneurysm:
  case PlantedTag::AneurysmCvsAdjacent:
    return {};
  }
  return {};
}

std::optional<eval::FpCategory> expected_category(PlantedTag tag) {
  using eval::FpCategory;
  switch (tag) {
  case PlantedTag::Extracranial:
    return FpCategory::Extracranial;
  case PlantedTag::Venous:
    return FpCategory::Venous;
  case PlantedTag::Tie:
  case PlantedTag::Arterial:
    return FpCategory::Arterial;
  case PlantedTag::Cvs:
    return FpCategory::Cvs;
  case PlantedTag::Nonvascular:
    return FpCategory::Nonvascular;
  default:
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// default layout

namespace {

// voxel-index corners on the 1 mm reference grid; world max is the last voxel centre
WorldBox ref_box(Index3 lo, Index3 hi_exclusive, const Vec3 &shift) {
  return {{lo[0] + shift[0], lo[1] + shift[1], lo[2] + shift[2]},
          {hi_exclusive[0] - 1 + shift[0], hi_exclusive[1] - 1 + shift[1], hi_exclusive[2] - 1 + shift[2]}};
}

Vec3 add(const Vec3 &a, const Vec3 &b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

Tube tube(std::initializer_list<Vec3> pts, double r, const Vec3 &shift) {
  Tube t;
  for (const Vec3 &p : pts)
    t.points_mm.push_back(add(p, shift));
  t.radius_mm = r;
  return t;
}

} // namespace

PhantomSpec default_phantom_spec(PhantomVariant variant, std::uint64_t layout_seed) {
  Vec3 s{0.0, 0.0, 0.0};
  if (layout_seed != 0) {
    std::mt19937_64 rng(layout_seed);
    for (auto &v : s)
      v = static_cast<double>(static_cast<int>(rng() % 5) - 2);
  }

  PhantomSpec spec;
  spec.brain = {add({32, 32, 36}, s), {24, 26, 20}};

  spec.arteries = {
      tube({{28, 29, 4}, {28, 29, 34}}, 2.0, s),   // carotid, passes the CVS region
      tube({{14, 20, 30}, {14, 48, 30}}, 1.5, s),  // left branch
      tube({{50, 18, 32}, {50, 46, 32}}, 1.5, s),  // right branch
      tube({{18, 14, 40}, {46, 14, 40}}, 1.5, s),  // runs parallel to a vein
  };
  spec.veins = {
      tube({{12, 32, 23}, {52, 32, 23}}, 1.0, s),  // crosses the CVS region
      tube({{18, 50, 44}, {46, 50, 44}}, 1.5, s),  // deep midline vein
      tube({{18, 20, 40}, {46, 20, 40}}, 1.5, s),  // mirror of the parallel artery
  };
  if (variant == PhantomVariant::VeinTouchingAneurysm)
    spec.veins.push_back(tube({{50, 18, 37}, {50, 46, 37}}, 2.0, s));

  // Template space is offset by -4 mm in x; the transform moves it back.
  const Vec3 template_shift = add(s, {-4.0, 0.0, 0.0});
  spec.template_cvs_box = WorldBox(add({24, 26, 20}, template_shift), add({40, 34, 26}, template_shift));
  spec.template_to_target = Affine4::translation({4.0, 0.0, 0.0});

  spec.aneurysms = {
      {"left", ref_box({11, 23, 27}, {18, 29, 34}, s), PlantedTag::Aneurysm},
      {"right", ref_box({47, 28, 29}, {54, 34, 36}, s),
       variant == PhantomVariant::VeinTouchingAneurysm ? PlantedTag::AneurysmVeinTouching : PlantedTag::Aneurysm},
      {"cavernous", ref_box({25, 26, 20}, {31, 33, 26}, s), PlantedTag::AneurysmCvsAdjacent},
  };
  spec.decoys = {
      {"extracranial-tissue", ref_box({50, 4, 2}, {56, 10, 8}, s), PlantedTag::Extracranial},
      {"extracranial-artery", ref_box({25, 26, 5}, {32, 33, 11}, s), PlantedTag::Extracranial},
      {"venous", ref_box({30, 47, 41}, {36, 54, 48}, s), PlantedTag::Venous},
      {"tie", ref_box({30, 12, 37}, {36, 23, 44}, s), PlantedTag::Tie},
      {"arterial", ref_box({11, 38, 27}, {18, 44, 34}, s), PlantedTag::Arterial},
      {"cvs", ref_box({36, 29, 20}, {42, 36, 26}, s), PlantedTag::Cvs},
      {"nonvascular", ref_box({36, 36, 48}, {42, 42, 54}, s), PlantedTag::Nonvascular},
  };
  return spec;
}

PhantomSpec scaled_phantom_spec(const Index3 &dims, const Vec3 &spacing_mm) {
  const PhantomSpec ref = default_phantom_spec();
  Vec3 extent{};
  for (int a = 0; a < 3; ++a)
    extent[a] = static_cast<double>(dims[a]) * spacing_mm[a];
  const double scale = std::min({extent[0], extent[1], extent[2]}) / 64.0;
  Vec3 offset{};
  for (int a = 0; a < 3; ++a)
    offset[a] = (extent[a] - 64.0 * scale) / 2.0;
  auto map = [&](const Vec3 &p) { return Vec3{offset[0] + scale * p[0], offset[1] + scale * p[1], offset[2] + scale * p[2]}; };
  auto map_box = [&](const WorldBox &b) { return WorldBox(map(b.min_mm()), map(b.max_mm())); };
  auto map_tubes = [&](const std::vector<Tube> &tubes) {
    std::vector<Tube> out;
    for (const Tube &t : tubes) {
      Tube m;
      for (const Vec3 &p : t.points_mm)
        m.points_mm.push_back(map(p));
      m.radius_mm = t.radius_mm * scale;
      out.push_back(std::move(m));
    }
    return out;
  };

  PhantomSpec spec = ref;
  spec.dims = dims;
  spec.spacing_mm = spacing_mm;
  spec.brain = {map(ref.brain.center_mm), {ref.brain.radii_mm[0] * scale, ref.brain.radii_mm[1] * scale,
                                           ref.brain.radii_mm[2] * scale}};
  spec.arteries = map_tubes(ref.arteries);
  spec.veins = map_tubes(ref.veins);
  // the template box is given already registered, so the transform is identity
  spec.template_cvs_box = map_box(transform_world_box(ref.template_to_target, ref.template_cvs_box));
  spec.template_to_target = Affine4::identity();
  spec.aneurysms.clear();
  for (const auto &a : ref.aneurysms)
    spec.aneurysms.push_back({a.name, map_box(a.box_mm), a.tag});
  spec.decoys.clear();
  for (const auto &d : ref.decoys)
    if (d.tag != PlantedTag::Tie)  // exact vein/artery equality does not survive resampling
      spec.decoys.push_back({d.name, map_box(d.box_mm), d.tag});
  return spec;
}

// ---------------------------------------------------------------------------
// rasterization

namespace {

double dist2_to_segment(const Vec3 &p, const Vec3 &a, const Vec3 &b) {
  Vec3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  Vec3 ap{p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  const double len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
  double t = len2 > 0.0 ? (ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double d2 = 0.0;
  for (int a2 = 0; a2 < 3; ++a2) {
    const double d = ap[a2] - t * ab[a2];
    d2 += d * d;
  }
  return d2;
}

template <typename Fn>
void for_each_voxel_in(const VoxelBox &box, Fn &&fn) {
  for (std::int64_t k = box.min()[2]; k < box.max()[2]; ++k)
    for (std::int64_t j = box.min()[1]; j < box.max()[1]; ++j)
      for (std::int64_t i = box.min()[0]; i < box.max()[0]; ++i)
        fn(i, j, k);
}

void rasterize_tube(BinaryMask &mask, const Tube &tube) {
  const Geometry &g = mask.geometry();
  const double r2 = tube.radius_mm * tube.radius_mm + 1e-9;
  const auto &pts = tube.points_mm;
  for (std::size_t s = 0; s + 1 < std::max<std::size_t>(pts.size(), 2); ++s) {
    const Vec3 &a = pts[s];
    const Vec3 &b = pts.size() > 1 ? pts[s + 1] : pts[s];
    Vec3 lo{}, hi{};
    for (int ax = 0; ax < 3; ++ax) {
      lo[ax] = std::min(a[ax], b[ax]) - tube.radius_mm;
      hi[ax] = std::max(a[ax], b[ax]) + tube.radius_mm;
    }
    for_each_voxel_in(voxelize_world_box(WorldBox(lo, hi), g), [&](auto i, auto j, auto k) {
      const Vec3 p = g.index_to_world().apply({double(i), double(j), double(k)});
      if (dist2_to_segment(p, a, b) <= r2)
        mask.set(i, j, k);
    });
  }
}

void rasterize_ellipsoid(BinaryMask &mask, const Ellipsoid &e) {
  const Geometry &g = mask.geometry();
  Vec3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = e.center_mm[a] - e.radii_mm[a];
    hi[a] = e.center_mm[a] + e.radii_mm[a];
  }
  const VoxelBox box = voxelize_world_box(WorldBox(lo, hi), g);
  const Affine4 &m = g.index_to_world();
  for (std::int64_t k = box.min()[2]; k < box.max()[2]; ++k)
    for (std::int64_t j = box.min()[1]; j < box.max()[1]; ++j) {
      // x rows are contiguous; compute the world centre incrementally
      Vec3 p = m.apply({double(box.min()[0]), double(j), double(k)});
      const Vec3 step{m(0, 0), m(1, 0), m(2, 0)};
      for (std::int64_t i = box.min()[0]; i < box.max()[0]; ++i) {
        double q = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double d = (p[a] - e.center_mm[a]) / e.radii_mm[a];
          q += d * d;
        }
        if (q <= 1.0)
          mask.set(i, j, k);
        for (int a = 0; a < 3; ++a)
          p[a] += step[a];
      }
    }
}

void check_spec(const PhantomSpec &spec, const Geometry &g) {
  for (int a = 0; a < 3; ++a)
    if (!(spec.brain.radii_mm[a] > 0.0))
      throw ValidationError("phantom spec: brain ellipsoid radii must be positive");
  auto check_tubes = [&](const std::vector<Tube> &tubes, const char *kind) {
    for (std::size_t t = 0; t < tubes.size(); ++t) {
      if (tubes[t].points_mm.empty() || !(tubes[t].radius_mm > 0.0))
        throw ValidationError(fmt::format("phantom spec: {} path {} needs points and a positive radius", kind, t));
      for (const Vec3 &p : tubes[t].points_mm) {
        const Vec3 idx = g.world_to_index().apply(p);
        for (int a = 0; a < 3; ++a)
          if (idx[a] < -1e-6 || idx[a] > static_cast<double>(g.dims()[a] - 1) + 1e-6)
            throw ValidationError(fmt::format("phantom spec: {} path {} point ({}, {}, {}) lies outside the grid", kind,
                                              t, p[0], p[1], p[2]));
      }
    }
  };
  check_tubes(spec.arteries, "artery");
  check_tubes(spec.veins, "vein");
  auto check_range = [](double lo, double hi, const char *what) {
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
      throw ValidationError(fmt::format("phantom spec: {} confidence range [{}, {}] invalid", what, lo, hi));
  };
  check_range(spec.decoy_confidence_min, spec.decoy_confidence_max, "decoy");
  check_range(spec.aneurysm_confidence_min, spec.aneurysm_confidence_max, "aneurysm");
}

// Counts the downstream filters will see, derived with the oracles only.
struct PlantedCounts {
  bool brain = false;
  std::int64_t artery = 0;
  std::int64_t vein_raw = 0;
  std::int64_t vein_final = 0;
  std::int64_t cvs = 0;
};

void check_planted(const PlantedBox &pb, const VoxelBox &vb, const PlantedCounts &c) {
  bool ok = false;
  switch (pb.tag) {
  case PlantedTag::Extracranial:
    ok = !c.brain && c.vein_raw == 0;
    break;
  case PlantedTag::Venous:
    ok = c.brain && c.vein_final >= 1 && c.vein_final > c.artery && c.cvs == 0;
    break;
  case PlantedTag::Tie:
    ok = c.brain && c.artery >= 1 && c.vein_final == c.artery && c.cvs == 0;
    break;
  case PlantedTag::Arterial:
    ok = c.brain && c.artery >= 1 && c.vein_raw == 0;
    break;
  case PlantedTag::Cvs:
    ok = c.brain && c.cvs >= 1 && c.vein_final == 0 && c.cvs >= c.artery;
    break;
  case PlantedTag::Nonvascular:
    ok = c.brain && c.artery == 0 && c.vein_raw == 0;
    break;
  case PlantedTag::Aneurysm:
    ok = c.brain && c.artery >= 1 && c.artery >= c.vein_raw && c.vein_final == 0;
    break;
  case PlantedTag::AneurysmVeinTouching:
    ok = c.brain && c.artery >= 1 && c.artery >= c.vein_raw && c.vein_final >= 1;
    break;
  case PlantedTag::AneurysmCvsAdjacent:
    ok = c.brain && c.artery >= 1 && c.artery >= c.vein_raw && c.cvs >= 1 && c.vein_final == 0;
    break;
  }
  if (!ok)
    throw ValidationError(fmt::format(
        "phantom spec: planted box '{}' ({}) at {} does not realize its tag: brain={} artery={} vein={} "
        "vein_final={} cvs={}",
        pb.name, tag_name(pb.tag), vb.to_string(), c.brain, c.artery, c.vein_raw, c.vein_final, c.cvs));
}

double draw(std::mt19937_64 &rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::round((lo + (hi - lo) * u) * 1000.0) / 1000.0;
}

} // namespace

PhantomCase generate_phantom(const PhantomSpec &spec, std::uint64_t seed) {
  const Geometry g = Geometry::axis_aligned(spec.dims, spec.spacing_mm, spec.origin_mm);
  check_spec(spec, g);

  BinaryMask brain(g), artery(g), vein(g);
  rasterize_ellipsoid(brain, spec.brain);
  for (const Tube &t : spec.arteries)
    rasterize_tube(artery, t);
  for (const Tube &t : spec.veins)
    rasterize_tube(vein, t);

  const VoxelBox region = voxelize_world_box(
      expand_world_box(transform_world_box(spec.template_to_target, spec.template_cvs_box), spec.cvs_expand_mm), g);
  const Index3 margin = mm_to_voxel_radius(g.spacing_mm(), spec.brain_margin_mm);

  PhantomCase pc{g, std::move(brain), std::move(artery), std::move(vein), spec.template_cvs_box,
                 spec.template_to_target, {}, {}, {}};
  auto counts_for = [&](const VoxelBox &vb) {
    PlantedCounts c;
    c.brain = oracle_box_overlap(vb.dilated(margin), pc.brain_seg) > 0 || !vb.intersect(region).is_empty();
    c.artery = oracle_box_overlap(vb, pc.artery);
    c.vein_raw = oracle_box_overlap(vb, pc.vein);
    c.cvs = oracle_box_overlap(vb.intersect(region), pc.vein);
    c.vein_final = c.vein_raw - c.cvs;
    return c;
  };
  auto planted_voxels = [&](const PlantedBox &pb) {
    const VoxelBox vb = voxelize_world_box(pb.box_mm, g);
    if (vb.is_empty())
      throw ValidationError(fmt::format("phantom spec: planted box '{}' lies outside the grid", pb.name));
    check_planted(pb, vb, counts_for(vb));
    return vb;
  };

  std::mt19937_64 rng(seed);
  for (const PlantedBox &a : spec.aneurysms) {
    if (!is_ground_truth_tag(a.tag))
      throw ValidationError(fmt::format("phantom spec: aneurysm '{}' carries decoy tag {}", a.name, tag_name(a.tag)));
    const VoxelBox vb = planted_voxels(a);
    const std::string det_id = "det-" + a.name;
    pc.ground_truth.push_back({"gt-" + a.name, vb});
    pc.detections.push_back({det_id, vb, draw(rng, spec.aneurysm_confidence_min, spec.aneurysm_confidence_max)});
    if (!pc.planted.emplace(det_id, a.tag).second)
      throw ValidationError(fmt::format("phantom spec: duplicate planted name '{}'", a.name));
  }
  for (const PlantedBox &d : spec.decoys) {
    if (is_ground_truth_tag(d.tag))
      throw ValidationError(fmt::format("phantom spec: decoy '{}' carries aneurysm tag {}", d.name, tag_name(d.tag)));
    const VoxelBox vb = planted_voxels(d);
    const std::string det_id = "decoy-" + d.name;
    pc.detections.push_back({det_id, vb, draw(rng, spec.decoy_confidence_min, spec.decoy_confidence_max)});
    if (!pc.planted.emplace(det_id, d.tag).second)
      throw ValidationError(fmt::format("phantom spec: duplicate planted name '{}'", d.name));
  }
  return pc;
}

} // namespace apf::phantom
