#pragma once

// Artifact writers. Every file opens with `#` comment lines carrying the config
// hash, grid size and density bounds.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cmp/grid.hpp"
#include "cmp/optimizer.hpp"
#include "cmp/verify.hpp"

namespace cmp {

struct FileHeader {
  std::vector<std::string> lines;

  static FileHeader describe(const std::string& config_hash, const Grid& grid,
                             const ProblemSpec& spec);
  void write(std::ostream& os) const;
};

void write_density_csv(std::ostream& os, const FileHeader& header, const DensityField& density,
                       int n);
void write_eigenfunction_csv(std::ostream& os, const FileHeader& header, const EigenPair& pair);
// JSON object per iteration, then a closing status record.
void write_trace(std::ostream& os, const FileHeader& header, const OptimizationTrace& trace);
void write_partition(std::ostream& os, const FileHeader& header,
                     const LevelSetPartition& partition);
void write_contours_csv(std::ostream& os, const FileHeader& header, const ContourSet& contours);

// Binary P5 graymap of a planar nodal field over the full lattice (zero off the
// grid); row 0 is the largest y, column 0 the smallest x, linear min-max scaling.
void write_pgm(std::ostream& os, const FileHeader& header, const Grid& grid,
               std::span<const double> values);

}  // namespace cmp
