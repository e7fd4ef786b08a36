#include "cmp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "cmp/error.hpp"

namespace cmp {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FileHeader FileHeader::describe(const std::string& config_hash, const Grid& grid,
                                const ProblemSpec& spec) {
  FileHeader h;
  h.lines.push_back("config_hash = " + config_hash);
  std::string dims;
  for (int k = 0; k < grid.dimension(); ++k) {
    if (k) dims += 'x';
    dims += std::to_string(grid.lattice_points(k));
  }
  h.lines.push_back("grid = " + grid.spec().shape_name() + ", lattice " + dims + ", " +
                    std::to_string(grid.size()) + " nodes, h = " + fmt(grid.spacing()));
  h.lines.push_back("bounds = lambda_low " + fmt(spec.lambda_low) + ", lambda_high " +
                    fmt(spec.lambda_high) + ", M " + fmt(spec.mass) + ", p " +
                    std::to_string(spec.order));
  return h;
}

void FileHeader::write(std::ostream& os) const {
  for (const auto& l : lines) os << "# " << l << '\n';
}

void write_density_csv(std::ostream& os, const FileHeader& header, const DensityField& density,
                       int n) {
  header.write(os);
  os << "node,rho,u\n";
  const auto u = density.conformal_factor(n);
  for (std::size_t i = 0; i < density.rho.size(); ++i)
    os << i << ',' << fmt(density.rho[i]) << ',' << fmt(u[i]) << '\n';
}

void write_eigenfunction_csv(std::ostream& os, const FileHeader& header, const EigenPair& pair) {
  header.write(os);
  os << "# eigenvalue = " << fmt(pair.eigenvalue) << ", residual = " << fmt(pair.residual)
     << '\n';
  os << "node,phi\n";
  for (std::size_t i = 0; i < pair.vector.size(); ++i)
    os << i << ',' << fmt(pair.vector[i]) << '\n';
}

void write_trace(std::ostream& os, const FileHeader& header, const OptimizationTrace& trace) {
  header.write(os);
  for (const TraceRecord& r : trace.records) {
    nlohmann::ordered_json j;
    j["iteration"] = r.iteration;
    j["eigenvalue"] = r.eigenvalue;
    j["threshold"] = r.threshold;
    j["set_change"] = r.set_change;
    j["residual"] = r.residual;
    j["inner_iterations"] = r.inner_iterations;
    os << j.dump() << '\n';
  }
  nlohmann::ordered_json end;
  end["status"] = to_string(trace.status);
  end["iterations"] = trace.records.size();
  end["monotone"] = trace.monotone();
  os << end.dump() << '\n';
}

void write_partition(std::ostream& os, const FileHeader& header,
                     const LevelSetPartition& partition) {
  header.write(os);
  os << "# threshold = " << fmt(partition.threshold) << '\n';
  auto list = [&](const char* name, const std::vector<std::int32_t>& xs) {
    os << name << " =";
    for (const auto x : xs) os << ' ' << x;
    os << '\n';
  };
  list("low", partition.low);
  list("high", partition.high);
  os << "fractional =";
  if (partition.has_fractional()) os << ' ' << partition.fractional;
  os << '\n';
}

void write_contours_csv(std::ostream& os, const FileHeader& header, const ContourSet& contours) {
  header.write(os);
  os << "# curves = " << contours.curves.size() << ", closed = " << contours.closed_curves()
     << ", high_components = " << contours.high_components << '\n';
  os << "curve,closed,x,y\n";
  for (std::size_t c = 0; c < contours.curves.size(); ++c)
    for (const auto& p : contours.curves[c].points)
      os << c << ',' << (contours.curves[c].closed ? 1 : 0) << ',' << fmt(p[0]) << ','
         << fmt(p[1]) << '\n';
}

void write_pgm(std::ostream& os, const FileHeader& header, const Grid& grid,
               std::span<const double> values) {
  if (grid.dimension() != 2) throw InputError("PGM export requires a planar grid");
  const std::int32_t nx = grid.lattice_points(0);
  const std::int32_t ny = grid.lattice_points(1);
  std::vector<double> field(static_cast<std::size_t>(nx) * ny, 0.0);
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    const auto c = grid.coords(i);
    field[static_cast<std::size_t>(ny - 1 - c[1]) * nx + c[0]] = values[i];
  }
  const auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
  const double lo = *lo_it, hi = *hi_it;
  os << "P5\n";
  for (const auto& l : header.lines) os << "# " << l << '\n';
  os << "# scale = linear min-max, min " << fmt(lo) << ", max " << fmt(hi)
     << "; row 0 = max y, column 0 = min x\n";
  os << nx << ' ' << ny << "\n255\n";
  std::vector<char> bytes(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    const double t = hi > lo ? (field[k] - lo) / (hi - lo) : 0.0;
    bytes[k] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t)));
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cmp
