#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <vector>

#include "mbms/config.hpp"
#include "mbms/rng.hpp"

namespace mbms {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

struct Cell {
  int id = 0;
  int site = 0;
  double boresight_deg = 0.0;
};

struct AntennaPattern {
  double max_gain_dbi = 14.0;
  double beamwidth_deg = 70.0;
  double max_attenuation_db = 20.0;
};

/// Seven 3-sector sites on a hexagonal lattice, wrapped onto a torus.
struct RadioGeometry {
  std::vector<Vec2> sites;
  std::vector<Cell> cells;
  double cell_radius = 0.0;
  double isd = 0.0;
  /// Cluster translations: the six images of the 7-site cluster around it.
  std::array<Vec2, 6> wrap_vectors{};
  /// Basis of the cluster lattice; spans a fundamental domain of the torus.
  Vec2 basis_a;
  Vec2 basis_b;
  AntennaPattern antenna;

  int num_cells() const { return static_cast<int>(cells.size()); }
  double region_area() const { return std::abs(basis_a.x * basis_b.y - basis_a.y * basis_b.x); }
};

RadioGeometry build_layout(const SimulationConfig& cfg);

/// Shortest displacement from `from` to any torus image of `to`.
Vec2 wrap_offset(Vec2 from, Vec2 to, const RadioGeometry& geom);
double wrap_distance(Vec2 a, Vec2 b, const RadioGeometry& geom);

/// Maps any plane point to its representative inside the 7-hexagon cluster.
Vec2 wrap_into_region(Vec2 p, const RadioGeometry& geom);
bool inside_region(Vec2 p, const RadioGeometry& geom);

/// Cell whose site hexagon and 120-degree sector contain the point.
int geometric_cell(Vec2 p, const RadioGeometry& geom);

/// Sector pattern: max gain minus min(12 (offset/beamwidth)^2, max attenuation).
double antenna_gain_db(const AntennaPattern& pattern, double offset_deg);
double antenna_gain_db(int cell, Vec2 ue, const RadioGeometry& geom);

struct UePosition {
  Vec2 xy;
  double heading = 0.0;  // radians
  double speed = 0.0;    // m/s
  double since_redraw = 0.0;
};

/// Random walk: straight-line motion, heading redrawn every `redraw_interval` s.
UePosition step_mobility(const UePosition& ue, double dt, Rng& rng, const RadioGeometry& geom,
                         double redraw_interval);
UePosition spawn_ue(Rng& rng, const RadioGeometry& geom, double speed);

void write_layout_csv(const RadioGeometry& geom, std::ostream& out);

}  // namespace mbms
