#include "interlock/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "json.hpp"

#include "interlock/common.hpp"
#include "interlock/io.hpp"
#include "interlock/rng.hpp"

namespace interlock::design {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool supported_grid_size(int n) { return n == 3 || n == 5 || n == 7; }

void require_supported(int n) {
    if (!supported_grid_size(n))
        throw ValidationError("unsupported grid size " + std::to_string(n) + " (want 3, 5 or 7)");
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw ValidationError(std::string("row count overflows 64 bits while sizing ") + what);
    return r;
}

void require_sorted_unique(const std::vector<double>& values, const char* what) {
    if (values.empty()) throw ValidationError(std::string(what) + ": empty value set");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] <= values[i - 1])
            throw ValidationError(std::string(what) + ": values must be strictly ascending");
}

}  // namespace

int angle_class_count(int grid_size) {
    require_supported(grid_size);
    return grid_size + 1;
}

void PanelDesign::validate_or_throw(double panel_size_mm) const {
    require_supported(grid_size);
    const auto expected = static_cast<std::size_t>(angle_class_count(grid_size));
    if (angles_deg.size() != expected)
        throw ValidationError("expected " + std::to_string(expected) + " angles for a " +
                              std::to_string(grid_size) + "x" + std::to_string(grid_size) +
                              " panel, got " + std::to_string(angles_deg.size()));
    for (double a : angles_deg)
        if (!(a > 0.0 && a < 90.0))
            throw ValidationError("interlocking angle " + format_double(a) +
                                  " outside the open interval (0, 90) degrees");
    if (!(length_ratio > 0.0 && length_ratio < grid_size))
        throw ValidationError("length ratio " + format_double(length_ratio) +
                              " must lie in (0, grid_size)");
    if (!(thickness_mm > 0.0)) throw ValidationError("thickness must be positive");
    if (!(panel_size_mm > 0.0)) throw ValidationError("panel size must be positive");

    // Every tile must keep a positive inward-shrunk top face.
    const auto lengths = tile_edge_lengths_mm(grid_size, length_ratio, panel_size_mm);
    const SymmetryMap classes = symmetry_classes(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        for (int j = 0; j < grid_size; ++j) {
            const double theta = angles_deg[classes.at(i, j)] * kDegToRad;
            const double shrink = 2.0 * thickness_mm * std::tan(theta);
            if (lengths[i] - shrink <= 0.0 || lengths[j] - shrink <= 0.0)
                throw ValidationError("tile (" + std::to_string(i) + "," + std::to_string(j) +
                                      ") top face collapses: edge too short for angle " +
                                      format_double(angles_deg[classes.at(i, j)]) + " deg");
        }
    }
}

TileGeometry tile_face_dims(double lower_edge_mm, double thickness_mm, double theta_in_deg,
                            double theta_out_deg) {
    if (!(lower_edge_mm > 0.0) || !(thickness_mm > 0.0))
        throw ValidationError("tile edge and thickness must be positive");
    if (!(theta_in_deg >= 0.0 && theta_in_deg < 90.0) ||
        !(theta_out_deg >= 0.0 && theta_out_deg < 90.0))
        throw ValidationError("face angles must lie in [0, 90) degrees");
    TileGeometry g;
    g.lower_edge_mm = lower_edge_mm;
    g.top_edge_out_mm = lower_edge_mm + 2.0 * thickness_mm * std::tan(theta_out_deg * kDegToRad);
    g.top_edge_in_mm = lower_edge_mm - 2.0 * thickness_mm * std::tan(theta_in_deg * kDegToRad);
    if (g.top_edge_in_mm <= 0.0)
        throw ValidationError("inward angle " + format_double(theta_in_deg) +
                              " deg collapses the top face of a " + format_double(lower_edge_mm) +
                              " mm tile");
    return g;
}

std::vector<double> tile_edge_lengths_mm(int grid_size, double length_ratio,
                                         double panel_size_mm) {
    require_supported(grid_size);
    if (!(length_ratio > 0.0 && length_ratio < grid_size))
        throw ValidationError("length ratio must lie in (0, grid_size)");
    const int centre = grid_size / 2;
    const double centre_edge = length_ratio * panel_size_mm / grid_size;
    const double other_edge = (panel_size_mm - centre_edge) / (grid_size - 1);
    std::vector<double> lengths(static_cast<std::size_t>(grid_size), other_edge);
    lengths[static_cast<std::size_t>(centre)] = centre_edge;
    return lengths;
}

SymmetryMap symmetry_classes(int grid_size) {
    require_supported(grid_size);
    SymmetryMap map;
    map.grid_size = grid_size;
    map.class_count = angle_class_count(grid_size);
    map.class_of.resize(static_cast<std::size_t>(grid_size) * grid_size, -1);

    const int c = grid_size / 2;
    for (int i = 0; i < grid_size; ++i) {
        for (int j = 0; j < grid_size; ++j) {
            const int di = std::abs(i - c), dj = std::abs(j - c);
            const int ring = std::max(di, dj);
            int cls;
            if (ring == 0) {
                cls = 0;
            } else if (grid_size == 3) {
                if (di == 1 && dj == 1) cls = 1;        // corners
                else if (dj == 0) cls = 2;              // north/south edge pair
                else cls = 3;                           // east/west edge pair
            } else if (ring == 1) {
                cls = (di == 1 && dj == 1) ? 1 : 2;     // ring-1 corners / edges
            } else if (ring == 2) {
                if (di == 2 && dj == 2) cls = 3;        // ring-2 corners
                else if (di == 0 || dj == 0) cls = 5;   // ring-2 edge midpoints
                else cls = 4;                           // ring-2 corner-adjacent
            } else {
                cls = (di == 3 && dj == 3) ? 6 : 7;     // ring-3 corners / edges
            }
            map.class_of[static_cast<std::size_t>(i) * grid_size + j] = cls;
        }
    }
    return map;
}

std::vector<double> encode_features(const PanelDesign& design, double time_s) {
    design.validate_or_throw();
    std::vector<double> f;
    f.reserve(design.angles_deg.size() + 3);
    f.insert(f.end(), design.angles_deg.begin(), design.angles_deg.end());
    f.push_back(design.length_ratio);
    f.push_back(static_cast<double>(design.tile_count()));
    f.push_back(time_s);
    return f;
}

std::vector<std::string> feature_names(int grid_size) {
    const int a = angle_class_count(grid_size);
    std::vector<std::string> names;
    for (int i = 1; i <= a; ++i) names.push_back("angle_" + std::to_string(i));
    names.push_back("lr");
    names.push_back("tiles");
    names.push_back("t");
    return names;
}

PanelDesign decode_features(std::span<const double> features, double& time_s,
                            double thickness_mm) {
    if (features.size() < 7) throw ValidationError("feature vector too short");
    const int a = static_cast<int>(features.size()) - 3;
    const int n = a - 1;
    require_supported(n);
    PanelDesign d;
    d.grid_size = n;
    d.angles_deg.assign(features.begin(), features.begin() + a);
    d.length_ratio = features[static_cast<std::size_t>(a)];
    d.thickness_mm = thickness_mm;
    const double tiles = features[static_cast<std::size_t>(a) + 1];
    if (tiles != static_cast<double>(n * n))
        throw ValidationError("tile-count feature " + format_double(tiles) +
                              " inconsistent with " + std::to_string(a) + " angle columns");
    time_s = features[static_cast<std::size_t>(a) + 2];
    d.validate_or_throw();
    return d;
}

void DesignGrid::validate_or_throw() const {
    require_supported(grid_size);
    require_sorted_unique(angle_values_deg, "angle values");
    require_sorted_unique(lr_values, "length-ratio values");
    for (double a : angle_values_deg)
        if (!(a > 0.0 && a < 90.0)) throw ValidationError("grid angle outside (0, 90) degrees");
    for (double lr : lr_values)
        if (!(lr > 0.0 && lr < grid_size))
            throw ValidationError("grid length ratio outside (0, grid_size)");
    if (t_end_s <= t_begin_s || t_begin_s < 0)
        throw ValidationError("time range must be a nonempty [t_begin, t_end) with t_begin >= 0");
    row_count();  // overflow check
}

std::uint64_t DesignGrid::design_count() const {
    const int a = angle_class_count(grid_size);
    std::uint64_t count = 1;
    for (int i = 0; i < a; ++i)
        count = checked_mul(count, angle_values_deg.size(), "angle axes");
    return checked_mul(count, lr_values.size(), "length-ratio axis");
}

std::uint64_t DesignGrid::row_count() const {
    return checked_mul(design_count(), static_cast<std::uint64_t>(time_steps()), "time axis");
}

std::size_t DesignGrid::feature_width() const {
    return static_cast<std::size_t>(angle_class_count(grid_size)) + 3;
}

void DesignGrid::row_at(std::uint64_t index, std::span<double> out) const {
    if (index >= row_count()) throw ValidationError("grid row index out of range");
    if (out.size() != feature_width()) throw ValidationError("output span has wrong width");
    const int a = angle_class_count(grid_size);
    const auto t_steps = static_cast<std::uint64_t>(time_steps());

    const std::uint64_t t_idx = index % t_steps;
    index /= t_steps;
    const std::uint64_t lr_idx = index % lr_values.size();
    index /= lr_values.size();
    for (int i = a - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = angle_values_deg[index % angle_values_deg.size()];
        index /= angle_values_deg.size();
    }
    out[static_cast<std::size_t>(a)] = lr_values[lr_idx];
    out[static_cast<std::size_t>(a) + 1] = static_cast<double>(grid_size * grid_size);
    out[static_cast<std::size_t>(a) + 2] = static_cast<double>(t_begin_s) + static_cast<double>(t_idx);
}

PanelDesign DesignGrid::design_at(std::uint64_t design_index) const {
    if (design_index >= design_count()) throw ValidationError("grid design index out of range");
    const int a = angle_class_count(grid_size);
    PanelDesign d;
    d.grid_size = grid_size;
    d.angles_deg.resize(static_cast<std::size_t>(a));
    d.length_ratio = lr_values[design_index % lr_values.size()];
    design_index /= lr_values.size();
    for (int i = a - 1; i >= 0; --i) {
        d.angles_deg[static_cast<std::size_t>(i)] =
            angle_values_deg[design_index % angle_values_deg.size()];
        design_index /= angle_values_deg.size();
    }
    return d;
}

GridStream::GridStream(const DesignGrid& grid, std::uint64_t begin_row, std::uint64_t end_row)
    : grid_(grid) {
    grid_.validate_or_throw();
    const std::uint64_t rows = grid_.row_count();
    end_ = std::min(end_row, rows);
    pos_ = std::min(begin_row, end_);
}

bool GridStream::next(std::span<double> out) {
    if (pos_ >= end_) return false;
    grid_.row_at(pos_, out);
    ++pos_;
    return true;
}

PanelDesign load_design_json(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad design file " + path.string() + ": " + e.what());
    }
    PanelDesign d;
    try {
        d.grid_size = j.at("grid_size").get<int>();
        d.angles_deg = j.at("angles_deg").get<std::vector<double>>();
        d.length_ratio = j.at("length_ratio").get<double>();
        d.thickness_mm = j.value("thickness_mm", kDefaultThicknessMm);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad design file " + path.string() + ": " + e.what());
    }
    d.validate_or_throw();
    return d;
}

void save_design_json(const PanelDesign& design, const std::filesystem::path& path) {
    design.validate_or_throw();
    nlohmann::json j;
    j["grid_size"] = design.grid_size;
    j["angles_deg"] = design.angles_deg;
    j["length_ratio"] = design.length_ratio;
    j["thickness_mm"] = design.thickness_mm;
    io::write_file_atomic(path, j.dump(2) + "\n");
}

DesignGrid load_grid_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad grid manifest " + path.string() + ": " + e.what());
    }
    DesignGrid g;
    try {
        g.grid_size = j.at("grid_size").get<int>();
        g.angle_values_deg = j.at("angle_values_deg").get<std::vector<double>>();
        g.lr_values = j.at("lr_values").get<std::vector<double>>();
        g.t_begin_s = j.at("t_begin_s").get<int>();
        g.t_end_s = j.at("t_end_s").get<int>();
        if (j.contains("row_count") && j["row_count"].get<std::uint64_t>() != g.row_count())
            throw ConfigError("grid manifest row_count does not match its value sets");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad grid manifest " + path.string() + ": " + e.what());
    }
    g.validate_or_throw();
    return g;
}

void save_grid_manifest(const DesignGrid& grid, const std::filesystem::path& path) {
    grid.validate_or_throw();
    nlohmann::json j;
    j["grid_size"] = grid.grid_size;
    j["angle_values_deg"] = grid.angle_values_deg;
    j["lr_values"] = grid.lr_values;
    j["t_begin_s"] = grid.t_begin_s;
    j["t_end_s"] = grid.t_end_s;
    j["feature_width"] = grid.feature_width();
    j["design_count"] = grid.design_count();
    j["row_count"] = grid.row_count();
    io::write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<PanelDesign> sample_grid_designs(int grid_size, int count, std::uint64_t seed) {
    require_supported(grid_size);
    if (count < 1) throw ConfigError("design sample count must be at least 1");

    const int classes = angle_class_count(grid_size);
    const std::size_t n_angles = kGridAnglesDeg.size();
    const std::size_t n_lr = kGridLengthRatios.size();
    double space = static_cast<double>(n_lr);
    for (int c = 0; c < classes; ++c) space *= static_cast<double>(n_angles);
    if (static_cast<double>(count) > space)
        throw ConfigError("more designs requested than the sampled space holds");

    Rng rng(seed);
    std::set<std::vector<double>> seen;
    std::vector<PanelDesign> designs;
    while (designs.size() < static_cast<std::size_t>(count)) {
        PanelDesign d;
        d.grid_size = grid_size;
        for (int c = 0; c < classes; ++c)
            d.angles_deg.push_back(kGridAnglesDeg[rng.below(n_angles)]);
        d.length_ratio = kGridLengthRatios[rng.below(n_lr)];
        auto key = d.angles_deg;
        key.push_back(d.length_ratio);
        if (!seen.insert(key).second) continue;
        d.validate_or_throw();
        designs.push_back(std::move(d));
    }
    return designs;
}

}  // namespace interlock::design
