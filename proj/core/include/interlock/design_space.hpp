#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace interlock::design {

// Angle classes per grid size: 4 for 3x3, 6 for 5x5, 8 for 7x7.
int angle_class_count(int grid_size);

inline constexpr double kDefaultPanelSizeMm = 50.0;
inline constexpr double kDefaultThicknessMm = 2.54;

// Canonical sampled value sets for exhaustive enumeration.
inline const std::vector<double> kGridAnglesDeg = {5.0, 10.0, 15.0, 20.0, 25.0};
inline const std::vector<double> kGridLengthRatios = {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};

// One panel configuration: an odd NxN arrangement of truncated-wedge tiles.
// Tiles are grouped into angle classes (see symmetry_classes); angles_deg
// carries one interlocking angle per class.
struct PanelDesign {
    int grid_size = 3;
    std::vector<double> angles_deg;  // size angle_class_count(grid_size)
    double length_ratio = 1.0;       // centre tile edge / uniform tile edge
    double thickness_mm = kDefaultThicknessMm;

    int tile_count() const { return grid_size * grid_size; }
    void validate_or_throw(double panel_size_mm = kDefaultPanelSizeMm) const;
};

PanelDesign load_design_json(const std::filesystem::path& path);
void save_design_json(const PanelDesign& design, const std::filesystem::path& path);

// Wedge tile cross-section. The lower face is an l x l square; the top face
// grows by 2*H*tan(theta_out) on the outward-tilted pair of sides and shrinks
// by 2*H*tan(theta_in) on the inward-tilted pair.
struct TileGeometry {
    double lower_edge_mm = 0.0;
    double top_edge_out_mm = 0.0;  // lower + 2H tan(theta_out)
    double top_edge_in_mm = 0.0;   // lower - 2H tan(theta_in), must stay positive
};

TileGeometry tile_face_dims(double lower_edge_mm, double thickness_mm,
                            double theta_in_deg, double theta_out_deg);

// Tile edge length per row/column index. The centre tile edge is
// length_ratio * panel/N; the remaining tiles share the rest equally so the
// panel side length is preserved.
std::vector<double> tile_edge_lengths_mm(int grid_size, double length_ratio,
                                         double panel_size_mm = kDefaultPanelSizeMm);

// Assignment of tiles to angle classes.
//
// Classes are ordered centre-outward by Chebyshev ring, and within a ring
// corners come before edge tiles. The exact partition:
//   3x3: [centre] [corners] [north/south edge] [east/west edge]
//   5x5: [centre] [ring-1 corners] [ring-1 edges]
//        [ring-2 corners] [ring-2 corner-adjacent] [ring-2 edge-midpoints]
//   7x7: 5x5 classes plus [ring-3 corners] [ring-3 edges]
// Every class is a union of 90-degree-rotation orbits except the two 3x3 edge
// classes: nine tiles cannot split into four nonempty rotation-invariant
// classes (the rotation group has only three orbits), so the 3x3 partition is
// invariant under 180-degree rotation and a 90-degree rotation swaps the two
// edge classes.
struct SymmetryMap {
    int grid_size = 0;
    int class_count = 0;
    std::vector<int> class_of;  // tile index row*N+col -> class id

    int at(int row, int col) const { return class_of[static_cast<std::size_t>(row) * grid_size + col]; }
};

SymmetryMap symmetry_classes(int grid_size);

// Model feature layout: [angles..., length_ratio, tile_count, time_s].
std::vector<double> encode_features(const PanelDesign& design, double time_s);
std::vector<std::string> feature_names(int grid_size);

// Inverse of encode_features; thickness is not part of the feature vector.
PanelDesign decode_features(std::span<const double> features, double& time_s,
                            double thickness_mm = kDefaultThicknessMm);

// Cartesian enumeration of (angles^classes x length_ratio x time) rows in
// lexicographic feature order, angle_1 slowest and time fastest. Row counts
// are computed with overflow checking before any iteration starts.
struct DesignGrid {
    int grid_size = 3;
    std::vector<double> angle_values_deg = kGridAnglesDeg;
    std::vector<double> lr_values = kGridLengthRatios;
    int t_begin_s = 0;
    int t_end_s = 600;  // half-open [t_begin, t_end)

    int time_steps() const { return t_end_s - t_begin_s; }
    std::uint64_t design_count() const;  // without the time axis
    std::uint64_t row_count() const;
    std::size_t feature_width() const;

    void validate_or_throw() const;

    // Random access decode of one enumerated row or design.
    void row_at(std::uint64_t index, std::span<double> out) const;
    PanelDesign design_at(std::uint64_t design_index) const;
};

DesignGrid load_grid_manifest(const std::filesystem::path& path);
void save_grid_manifest(const DesignGrid& grid, const std::filesystem::path& path);

// `count` distinct designs drawn uniformly (with rejection of repeats) from
// the canonical value grid. Deterministic in (grid_size, count, seed).
std::vector<PanelDesign> sample_grid_designs(int grid_size, int count, std::uint64_t seed);

// Streams grid rows in enumeration order without materializing the grid.
class GridStream {
  public:
    explicit GridStream(const DesignGrid& grid, std::uint64_t begin_row = 0,
                        std::uint64_t end_row = UINT64_MAX);

    // Fills `out` (feature_width doubles); returns false when exhausted.
    bool next(std::span<double> out);
    std::uint64_t position() const { return pos_; }

  private:
    DesignGrid grid_;
    std::uint64_t pos_ = 0;
    std::uint64_t end_ = 0;
};

}  // namespace interlock::design
