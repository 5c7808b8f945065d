#include "acflow/energyscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace acflow {

void GridSpec::validate() const {
  if (!(r_max > 0)) throw std::invalid_argument("grid r_max must be positive");
  if (n_range < 2) throw std::invalid_argument("grid needs at least two range bins");
  if (!(azimuth_step > 0) || !(azimuth_max > azimuth_min)) {
    throw std::invalid_argument("grid azimuth interval is empty");
  }
}

int GridSpec::n_azimuth() const {
  return static_cast<int>(std::lround((azimuth_max - azimuth_min) / azimuth_step)) + 1;
}

double GridSpec::azimuth_center(int k) const {
  // Written relative to the middle column so symmetric grids mirror exactly.
  const double mid = (azimuth_min + azimuth_max) / 2;
  return mid + (k - (n_azimuth() - 1) / 2.0) * azimuth_step;
}

std::optional<int> GridSpec::range_bin(double r) const {
  if (!(r > 0) || r > r_max) return std::nullopt;
  const int i = static_cast<int>(r / range_step());
  return std::min(i, n_range - 1);
}

std::optional<int> GridSpec::azimuth_bin(double theta) const {
  const int n = n_azimuth();
  const double offset = (theta - (azimuth_min + azimuth_max) / 2) / azimuth_step;
  long k;
  if (n % 2 == 1) {
    k = (n - 1) / 2 + std::lround(offset);
  } else {
    k = static_cast<long>(std::floor(offset + (n - 1) / 2.0 + 0.5));
  }
  if (k < 0 || k >= n) return std::nullopt;
  return static_cast<int>(k);
}

Eigen::Vector2d GridSpec::index_coordinates(double r, double theta) const {
  const double offset = (theta - (azimuth_min + azimuth_max) / 2) / azimuth_step;
  return {r / range_step() - 0.5, offset + (n_azimuth() - 1) / 2.0};
}

Energyscape Energyscape::zeros(const GridSpec& spec, int sensor_index) {
  spec.validate();
  return {spec, EnergyGrid::Zero(spec.n_range, spec.n_azimuth()), sensor_index};
}

const char* layer_name(Layer layer) {
  switch (layer) {
    case Layer::CA: return "CA";
    case Layer::OA: return "OA";
    case Layer::RCF: return "RCF";
    case Layer::AFF: return "AFF";
  }
  return "?";
}

namespace {

struct ContainsVisitor {
  const Eigen::Vector2d& p;

  bool operator()(const CircleRegion& c) const { return (p - c.center).norm() <= c.radius; }
  bool operator()(const RectangleRegion& r) const {
    return p.x() >= r.x_min && p.x() <= r.x_max && p.y() >= r.y_min && p.y() <= r.y_max;
  }
  bool operator()(const TrapezoidRegion& t) const {
    const double s = p.x() - t.forward_offset;
    if (s < 0 || s > t.length) return false;
    const double half = t.near_half_width + (t.far_half_width - t.near_half_width) * (s / t.length);
    return std::abs(p.y()) <= half;
  }
  bool operator()(const WedgeRegion& w) const {
    const double r = p.norm();
    if (r < w.r_min || r > w.r_max) return false;
    const double bearing = std::atan2(p.y(), p.x());
    return bearing >= w.theta_min && bearing <= w.theta_max;
  }
};

struct MirrorVisitor {
  RegionShape operator()(const CircleRegion& c) const {
    return CircleRegion{{c.center.x(), -c.center.y()}, c.radius};
  }
  RegionShape operator()(const RectangleRegion& r) const {
    return RectangleRegion{r.x_min, r.x_max, -r.y_max, -r.y_min};
  }
  RegionShape operator()(const TrapezoidRegion& t) const { return t; }
  RegionShape operator()(const WedgeRegion& w) const {
    return WedgeRegion{-w.theta_max, -w.theta_min, w.r_min, w.r_max};
  }
};

void require_same_spec(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw std::invalid_argument("energyscape and mask grids differ");
}

}  // namespace

bool region_contains(const RegionShape& shape, const Eigen::Vector2d& p) {
  return std::visit(ContainsVisitor{p}, shape);
}

bool ControlRegion::contains(const Eigen::Vector2d& p) const {
  return std::any_of(parts.begin(), parts.end(),
                     [&](const RegionShape& s) { return region_contains(s, p); });
}

ControlRegion ControlRegion::mirrored() const {
  ControlRegion out;
  out.parts.reserve(parts.size());
  for (const auto& s : parts) out.parts.push_back(std::visit(MirrorVisitor{}, s));
  return out;
}

TernaryMask build_region_mask(const ControlRegion& region, const SensorPose<double>& pose,
                              const GridSpec& spec, Layer layer, int sensor_index) {
  spec.validate();
  TernaryMask mask{spec, TernaryGrid::Zero(spec.n_range, spec.n_azimuth()), layer, sensor_index};
  for (int k = 0; k < spec.n_azimuth(); ++k) {
    const double theta = spec.azimuth_center(k);
    for (int i = 0; i < spec.n_range; ++i) {
      const Eigen::Vector2d p = sensor_to_platform(pose, spec.range_center(i), theta);
      if (region.contains(p)) mask.cells(i, k) = side_of(p);
    }
  }
  return mask;
}

std::vector<std::pair<int, int>> rasterize_polyline(const std::vector<PolarCoord<double>>& points,
                                                    const GridSpec& spec) {
  std::vector<std::pair<int, int>> cells;
  const int n_az = spec.n_azimuth();
  // Cell coordinates shifted so that cell (i, k) is [i, i+1) x [k, k+1).
  auto corner_coords = [&](const PolarCoord<double>& p) {
    return Eigen::Vector2d(spec.index_coordinates(p.r, p.theta) + Eigen::Vector2d(0.5, 0.5));
  };
  auto mark = [&](long i, long k) {
    if (i == spec.n_range) i = spec.n_range - 1;  // r == r_max belongs to the last bin
    if (i < 0 || i >= spec.n_range || k < 0 || k >= n_az) return;
    cells.emplace_back(static_cast<int>(i), static_cast<int>(k));
  };
  if (points.empty()) return cells;
  // Cell edges are closed: a vertex on an edge, up to rounding, marks the
  // cells on both sides. Wall feet of forward-looking sensors fall exactly on
  // range-bin edges whenever d is a multiple of the bin size.
  constexpr double edge_tol = 1e-6;
  for (const auto& p : points) {
    const Eigen::Vector2d c = corner_coords(p);
    for (double di : {-edge_tol, 0.0, edge_tol})
      for (double dk : {-edge_tol, 0.0, edge_tol})
        mark(static_cast<long>(std::floor(c.x() + di)), static_cast<long>(std::floor(c.y() + dk)));
  }
  // Grid traversal of each straight piece, visiting every cell it touches.
  for (std::size_t n = 1; n < points.size(); ++n) {
    const Eigen::Vector2d a = corner_coords(points[n - 1]);
    const Eigen::Vector2d b = corner_coords(points[n]);
    long i = static_cast<long>(std::floor(a.x())), k = static_cast<long>(std::floor(a.y()));
    const long i_end = static_cast<long>(std::floor(b.x())), k_end = static_cast<long>(std::floor(b.y()));
    const Eigen::Vector2d d = b - a;
    const long si = d.x() > 0 ? 1 : -1, sk = d.y() > 0 ? 1 : -1;
    constexpr double inf = std::numeric_limits<double>::infinity();
    double next_i = d.x() != 0 ? ((si > 0 ? i + 1 : i) - a.x()) / d.x() : inf;
    double next_k = d.y() != 0 ? ((sk > 0 ? k + 1 : k) - a.y()) / d.y() : inf;
    const double step_i = d.x() != 0 ? 1 / std::abs(d.x()) : inf;
    const double step_k = d.y() != 0 ? 1 / std::abs(d.y()) : inf;
    mark(i, k);
    while ((i != i_end || k != k_end) && std::min(next_i, next_k) <= 1) {
      if (next_i < next_k) {
        i += si;
        next_i += step_i;
      } else if (next_k < next_i) {
        k += sk;
        next_k += step_k;
      } else {
        // Through a cell corner: both side neighbours are touched too.
        mark(i + si, k);
        mark(i, k + sk);
        i += si;
        k += sk;
        next_i += step_i;
        next_k += step_k;
      }
      mark(i, k);
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

RasterFlowLine rasterize_flow_line(const SensorPose<double>& pose, double d, const GridSpec& spec,
                                   int sensor_index) {
  spec.validate();
  RasterFlowLine out{spec, {}, d, sensor_index};
  const double fov = std::min(-spec.azimuth_min, spec.azimuth_max);

  // Visible part of the platform line y = d, parametrised by platform x:
  // inside the range disc and in front of the sensor.
  const Eigen::Vector2d s = sensor_origin(pose);
  const double dy = d - s.y();
  const double reach2 = spec.r_max * spec.r_max - dy * dy;
  if (reach2 <= 0) return out;
  const double reach = std::sqrt(reach2);
  double lo = s.x() - reach;
  double hi = s.x() + reach;
  // Along-axis sensor coordinate: (x - s.x) cos(delta) - dy sin(delta) >= 0.
  const double c = std::cos(pose.delta());
  const double sn = std::sin(pose.delta());
  if (std::abs(c) < 1e-12) {
    if (-dy * sn < 0) return out;
  } else if (c > 0) {
    lo = std::max(lo, s.x() + dy * sn / c);
  } else {
    hi = std::min(hi, s.x() + dy * sn / c);
  }
  if (!(hi - lo > 1e-9)) return out;

  auto start_at = [&](double frac) {
    return platform_to_sensor(pose, Eigen::Vector2d(lo + frac * (hi - lo), d));
  };
  PolarCoord<double> start = start_at(0.5);
  if (start.r < 10 * kMinRange) start = start_at(0.75);
  if (start.r < kMinRange || start.r > spec.r_max || std::abs(start.theta) > fov) return out;

  TraceOptions<double> opt;
  opt.fov_half_angle = fov;
  const auto line = trace_flow_line(pose, EgoMotion<double>{1.0, 0.0}, start, spec.r_max, opt);
  out.cells = rasterize_polyline(line.samples, spec);
  return out;
}

RasterFlowLine rasterize_flow_band(const SensorPose<double>& pose, double d, double width,
                                   const GridSpec& spec, int sensor_index) {
  if (!(width >= 0)) throw std::invalid_argument("flow band width must be non-negative");
  if (width == 0) return rasterize_flow_line(pose, d, spec, sensor_index);
  const int n = static_cast<int>(std::ceil(width / (spec.range_step() / 2)));
  RasterFlowLine out{spec, {}, d, sensor_index};
  for (int k = 0; k < n; ++k) {
    const double offset = d + ((k + 0.5) / n - 0.5) * width;
    const auto line = rasterize_flow_line(pose, offset, spec, sensor_index);
    out.cells.insert(out.cells.end(), line.cells.begin(), line.cells.end());
  }
  std::sort(out.cells.begin(), out.cells.end());
  out.cells.erase(std::unique(out.cells.begin(), out.cells.end()), out.cells.end());
  return out;
}

double masked_sum(const Energyscape& E, const TernaryMask& M) {
  require_same_spec(E.spec, M.spec);
  return (E.cells.array() * M.cells.cast<double>().array()).sum();
}

InverseSquareTerms masked_inverse_r2_terms(const Energyscape& E, const TernaryMask& M) {
  require_same_spec(E.spec, M.spec);
  const Eigen::ArrayXd r = Eigen::ArrayXd::LinSpaced(E.spec.n_range, 0.5, E.spec.n_range - 0.5) *
                           E.spec.range_step();
  const Eigen::ArrayXd inv_r2 = r.square().inverse();
  const Eigen::ArrayXXd em = E.cells.array() * M.cells.cast<double>().array();
  return {(em.colwise() * inv_r2).sum(), em.abs().sum()};
}

double masked_inverse_r2_ratio(const Energyscape& E, const TernaryMask& M) {
  const auto t = masked_inverse_r2_terms(E, M);
  if (t.absolute == 0) throw std::domain_error("masked energy is zero; ratio undefined");
  return t.weighted / t.absolute;
}

double gamma(const Energyscape& E, const RasterFlowLine& F) {
  require_same_spec(E.spec, F.spec);
  if (F.cells.empty()) throw std::invalid_argument("gamma of an empty flow-line");
  double sum = 0;
  for (const auto& [i, k] : F.cells) sum += E.cells(i, k) * std::sqrt(E.spec.range_center(i));
  return sum / static_cast<double>(F.cells.size());
}

void write_csv(std::ostream& os, const TernaryMask& mask) {
  for (int i = 0; i < mask.cells.rows(); ++i) {
    for (int k = 0; k < mask.cells.cols(); ++k) {
      if (k) os << ',';
      os << static_cast<int>(mask.cells(i, k));
    }
    os << '\n';
  }
}

void write_csv(std::ostream& os, const RasterFlowLine& raster) {
  TernaryGrid grid = TernaryGrid::Zero(raster.spec.n_range, raster.spec.n_azimuth());
  for (const auto& [i, k] : raster.cells) grid(i, k) = 1;
  write_csv(os, TernaryMask{raster.spec, grid, Layer::AFF, raster.sensor_index});
}

void write_csv(std::ostream& os, const Energyscape& E) {
  const Eigen::IOFormat csv(Eigen::FullPrecision, Eigen::DontAlignCols, ",", "\n");
  os << E.cells.format(csv) << '\n';
}

}  // namespace acflow
