#pragma once

#include <iosfwd>
#include <string>

#include "conewidth/field.hpp"
#include "conewidth/grid.hpp"
#include "conewidth/pipeline.hpp"
#include "conewidth/pointcloud.hpp"
#include "conewidth/width.hpp"

namespace conewidth {

/// Deterministic float formatting used by every writer ("%.17g").
std::string fmt(double v);

/// GridSet as binary PBM (P4) plus a structured-text sidecar `<path>.hdr`
/// carrying origin, spacing, dims and padding.
void write_pbm(const GridSet& G, const std::string& path);
GridSet read_pbm(const std::string& path);

/// PointCloud CSV: header row, then x,y[,...],nx,ny[,...],delta per point.
/// Empty nx/ny with a delta encode a full-space normal; all empty = no normal.
/// A leading comment line carries the bounding box.
void write_pointcloud_csv(const PointCloud& E, const std::string& path);
PointCloud read_pointcloud_csv(const std::string& path);

/// ScalarField binary: magic "CWF1", little-endian u32/f64 header, row-major
/// float64 node samples. CSV export lists x,y,value rows.
void write_field(const ScalarField& f, const std::string& path);
ScalarField read_field(const std::string& path);
void write_field_csv(const ScalarField& f, const std::string& path);

void write_width_result(const WidthResult& w, std::ostream& os);
void write_width_result(const WidthResult& w, const std::string& path);

/// BuildTrace directory: manifest.txt (stage configs, measured constants,
/// thresholds) plus one field file per kept stage.
void write_trace(const BuildTrace& trace, const std::string& dir,
                 const std::string& extra_manifest = "");

bool make_directory(const std::string& dir);

}  // namespace conewidth
