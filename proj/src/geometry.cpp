#include "mbms/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <ostream>

namespace mbms {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

Vec2 rotate(Vec2 v, double rad) {
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

double min_site_distance2(Vec2 p, const RadioGeometry& geom) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& s : geom.sites) best = std::min(best, (p - s).norm2());
  return best;
}

}  // namespace

RadioGeometry build_layout(const SimulationConfig& cfg) {
  RadioGeometry geom;
  geom.cell_radius = cfg.cell_radius_m;
  geom.isd = cfg.isd_m();
  geom.antenna = {cfg.antenna_max_gain_dbi, cfg.antenna_beamwidth_deg,
                  cfg.antenna_max_attenuation_db};

  const Vec2 e1{geom.isd, 0.0};
  const Vec2 e2 = rotate(e1, std::numbers::pi / 3.0);
  geom.sites = {Vec2{}, e1, e2, e2 - e1, e1 * -1.0, e2 * -1.0, e1 - e2};

  for (int s = 0; s < 7; ++s) {
    for (int k = 0; k < 3; ++k) {
      geom.cells.push_back(Cell{3 * s + k, s, 120.0 * k});
    }
  }

  // 7-site clusters tile the plane along 2*e1 + e2 and its 60-degree rotations.
  const Vec2 a = e1 * 2.0 + e2;
  for (int k = 0; k < 6; ++k) geom.wrap_vectors[k] = rotate(a, k * std::numbers::pi / 3.0);
  geom.basis_a = geom.wrap_vectors[0];
  geom.basis_b = geom.wrap_vectors[1];
  return geom;
}

Vec2 wrap_offset(Vec2 from, Vec2 to, const RadioGeometry& geom) {
  Vec2 best = to - from;
  double best2 = best.norm2();
  for (const Vec2& w : geom.wrap_vectors) {
    const Vec2 d = to + w - from;
    if (const double d2 = d.norm2(); d2 < best2) {
      best2 = d2;
      best = d;
    }
  }
  return best;
}

double wrap_distance(Vec2 a, Vec2 b, const RadioGeometry& geom) {
  return wrap_offset(a, b, geom).norm();
}

Vec2 wrap_into_region(Vec2 p, const RadioGeometry& geom) {
  // Coordinates in the cluster basis, reduced to the unit parallelogram.
  const Vec2 a = geom.basis_a;
  const Vec2 b = geom.basis_b;
  const double det = a.x * b.y - a.y * b.x;
  const double u = (p.x * b.y - p.y * b.x) / det;
  const double v = (a.x * p.y - a.y * p.x) / det;
  const Vec2 base = p - a * std::floor(u) - b * std::floor(v);

  // Every torus image has the same distance to its nearest lattice site; the
  // image whose nearest site is a central one is the representative.
  Vec2 best = base;
  double best2 = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 2; ++i) {
    for (int j = -1; j <= 2; ++j) {
      const Vec2 q = base - a * i - b * j;
      if (const double d2 = min_site_distance2(q, geom); d2 < best2 - 1e-9) {
        best2 = d2;
        best = q;
      }
    }
  }
  return best;
}

bool inside_region(Vec2 p, const RadioGeometry& geom) {
  const double central = min_site_distance2(p, geom);
  for (const Vec2& w : geom.wrap_vectors) {
    for (const Vec2& s : geom.sites) {
      if ((p - s - w).norm2() < central - 1e-6) return false;
    }
  }
  return true;
}

int geometric_cell(Vec2 p, const RadioGeometry& geom) {
  const Vec2 q = wrap_into_region(p, geom);
  int site = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < static_cast<int>(geom.sites.size()); ++s) {
    if (const double d2 = (q - geom.sites[s]).norm2(); d2 < best) {
      best = d2;
      site = s;
    }
  }
  const Vec2 d = q - geom.sites[site];
  double az = std::atan2(d.y, d.x) * kDeg;
  if (az < 0.0) az += 360.0;
  const int sector = static_cast<int>(std::lround(az / 120.0)) % 3;
  return 3 * site + sector;
}

double antenna_gain_db(const AntennaPattern& pattern, double offset_deg) {
  double off = std::remainder(offset_deg, 360.0);
  const double ratio = off / pattern.beamwidth_deg;
  return pattern.max_gain_dbi - std::min(12.0 * ratio * ratio, pattern.max_attenuation_db);
}

double antenna_gain_db(int cell, Vec2 ue, const RadioGeometry& geom) {
  const Cell& c = geom.cells.at(cell);
  const Vec2 d = wrap_offset(geom.sites[c.site], ue, geom);
  const double az = (d.norm2() > 0.0) ? std::atan2(d.y, d.x) * kDeg : c.boresight_deg;
  return antenna_gain_db(geom.antenna, az - c.boresight_deg);
}

UePosition step_mobility(const UePosition& ue, double dt, Rng& rng, const RadioGeometry& geom,
                         double redraw_interval) {
  UePosition next = ue;
  if (dt <= 0.0) return next;
  if (next.since_redraw >= redraw_interval) {
    next.heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    next.since_redraw = 0.0;
  }
  const double step = next.speed * dt;
  next.xy = wrap_into_region(
      next.xy + Vec2{std::cos(next.heading) * step, std::sin(next.heading) * step}, geom);
  next.since_redraw += dt;
  return next;
}

UePosition spawn_ue(Rng& rng, const RadioGeometry& geom, double speed) {
  UePosition ue;
  const double u = rng.uniform();
  const double v = rng.uniform();
  ue.xy = wrap_into_region(geom.basis_a * u + geom.basis_b * v, geom);
  ue.heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  ue.speed = speed;
  return ue;
}

void write_layout_csv(const RadioGeometry& geom, std::ostream& out) {
  out << "cell_id,site_x,site_y,azimuth_deg\n";
  for (const Cell& c : geom.cells) {
    out << c.id << ',' << geom.sites[c.site].x << ',' << geom.sites[c.site].y << ','
        << c.boresight_deg << '\n';
  }
}

}  // namespace mbms
