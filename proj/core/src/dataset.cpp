#include "interlock/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "json.hpp"

#include "interlock/common.hpp"
#include "interlock/io.hpp"
#include "interlock/rng.hpp"

namespace interlock::data {

namespace {

constexpr int kMaxAngleColumns = 8;  // widest supported grid (7x7)

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw ConfigError(std::string("trailing junk in ") + what);
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError(std::string("bad number for ") + what + ": '" + s + "'");
    }
}

}  // namespace

void SampleTable::append(const SampleTable& other) {
    if (rows() == 0 && feature_names.empty()) {
        *this = other;
        return;
    }
    if (other.feature_names != feature_names || other.target_names != target_names)
        throw ValidationError("cannot append tables with different schemas");
    features.insert(features.end(), other.features.begin(), other.features.end());
    targets.insert(targets.end(), other.targets.begin(), other.targets.end());
    provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
}

SampleTable flatten_runs(const std::vector<SimRun>& runs) {
    if (runs.empty()) throw ValidationError("no runs to flatten");
    const int n = runs.front().design.grid_size;

    SampleTable table;
    table.feature_names = design::feature_names(n);
    table.target_names.assign(thermo::kChannelNames.begin(), thermo::kChannelNames.end());

    for (const auto& run : runs) {
        if (run.design.grid_size != n)
            throw ValidationError("all runs in one table must share a grid size");
        for (std::size_t k = 0; k < run.series.samples(); ++k) {
            const double t = run.series.time_s[k];
            const auto row = design::encode_features(run.design, t);
            table.features.insert(table.features.end(), row.begin(), row.end());
            for (int c = 0; c < thermo::kChannelCount; ++c)
                table.targets.push_back(run.series.channels[static_cast<std::size_t>(c)][k]);
            table.provenance.push_back({run.design_id, t});
        }
    }
    return table;
}

std::pair<SampleTable, SampleTable> split(const SampleTable& table, double train_fraction,
                                          std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        throw ValidationError("train fraction must lie in [0, 1]");
    const std::size_t n = table.rows();
    Rng rng(seed);
    auto order = rng.permutation(n);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));

    auto take = [&](std::size_t begin, std::size_t end) {
        SampleTable out;
        out.feature_names = table.feature_names;
        out.target_names = table.target_names;
        const std::size_t fw = table.feature_width(), tw = table.target_width();
        out.features.reserve((end - begin) * fw);
        out.targets.reserve((end - begin) * tw);
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t r = order[i];
            out.features.insert(out.features.end(), table.feature_row(r), table.feature_row(r) + fw);
            out.targets.insert(out.targets.end(), table.target_row(r), table.target_row(r) + tw);
            out.provenance.push_back(table.provenance[r]);
        }
        return out;
    };
    return {take(0, n_train), take(n_train, n)};
}

void Scaler::check_width(std::size_t width) const {
    if (width != mins_.size()) throw ValidationError("scaler width mismatch");
}

Scaler Scaler::fit(const std::vector<double>& row_major, std::size_t width,
                   const std::vector<std::string>& columns) {
    if (width == 0 || columns.size() != width)
        throw ValidationError("scaler needs one column name per column");
    if (row_major.empty() || row_major.size() % width != 0)
        throw ValidationError("scaler fit data is not a whole number of rows");

    Scaler s;
    s.columns_ = columns;
    s.mins_.assign(width, 1e300);
    s.maxs_.assign(width, -1e300);
    const std::size_t rows = row_major.size() / width;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = row_major.data() + r * width;
        for (std::size_t c = 0; c < width; ++c) {
            s.mins_[c] = std::min(s.mins_[c], row[c]);
            s.maxs_[c] = std::max(s.maxs_[c], row[c]);
        }
    }
    std::uint64_t fp = fnv1a64(row_major.data(), row_major.size() * sizeof(double));
    fp = fnv1a64(&width, sizeof(width), fp);
    s.fingerprint_ = fp;
    return s;
}

void Scaler::transform_row(const double* in, double* out) const {
    for (std::size_t c = 0; c < mins_.size(); ++c) {
        const double span = maxs_[c] - mins_[c];
        out[c] = span > 0.0 ? (in[c] - mins_[c]) / span : 0.0;
    }
}

void Scaler::inverse_row(const double* in, double* out) const {
    for (std::size_t c = 0; c < mins_.size(); ++c) {
        const double span = maxs_[c] - mins_[c];
        out[c] = span > 0.0 ? mins_[c] + in[c] * span : mins_[c];
    }
}

void Scaler::transform(std::vector<double>& row_major, std::size_t width) const {
    check_width(width);
    if (row_major.size() % width != 0) throw ValidationError("ragged data in scaler transform");
    for (std::size_t r = 0; r < row_major.size() / width; ++r)
        transform_row(row_major.data() + r * width, row_major.data() + r * width);
}

void Scaler::inverse(std::vector<double>& row_major, std::size_t width) const {
    check_width(width);
    if (row_major.size() % width != 0) throw ValidationError("ragged data in scaler inverse");
    for (std::size_t r = 0; r < row_major.size() / width; ++r)
        inverse_row(row_major.data() + r * width, row_major.data() + r * width);
}

std::string Scaler::to_json() const {
    nlohmann::json j;
    j["columns"] = columns_;
    j["mins"] = mins_;
    j["maxs"] = maxs_;
    j["fingerprint"] = hex_string(fingerprint_);
    return j.dump(2);
}

Scaler Scaler::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Scaler s;
        s.columns_ = j.at("columns").get<std::vector<std::string>>();
        s.mins_ = j.at("mins").get<std::vector<double>>();
        s.maxs_ = j.at("maxs").get<std::vector<double>>();
        s.fingerprint_ = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
        if (s.columns_.size() != s.mins_.size() || s.mins_.size() != s.maxs_.size())
            throw ConfigError("scaler field lengths disagree");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scaler json: ") + e.what());
    }
}

void write_dataset_csv(const SampleTable& table, int grid_size,
                       const std::filesystem::path& path) {
    const int classes = design::angle_class_count(grid_size);
    const std::size_t fw = table.feature_width();
    if (fw != static_cast<std::size_t>(classes) + 3)
        throw ValidationError("table width does not match the stated grid size");

    std::ostringstream out;
    out << "design_id,n";
    for (int a = 1; a <= kMaxAngleColumns; ++a) out << ",angle_" << a;
    out << ",lr,tiles,t";
    for (const auto& name : table.target_names) out << ',' << name;
    out << '\n';

    for (std::size_t r = 0; r < table.rows(); ++r) {
        const double* f = table.feature_row(r);
        out << table.provenance[r].design_id << ',' << grid_size;
        for (int a = 0; a < kMaxAngleColumns; ++a) {
            out << ',';
            if (a < classes) out << format_double(f[a]);
        }
        out << ',' << format_double(f[classes]);      // lr
        out << ',' << format_double(f[classes + 1]);  // tiles
        out << ',' << format_double(f[classes + 2]);  // t
        const double* t = table.target_row(r);
        for (std::size_t c = 0; c < table.target_width(); ++c) out << ',' << format_double(t[c]);
        out << '\n';
    }
    io::write_file_atomic(path, out.str());
}

SampleTable read_dataset_csv(const std::filesystem::path& path, int* grid_size_out) {
    std::istringstream in(io::read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path.string());
    const auto header = io::split_csv_line(line);
    const std::size_t fixed = 2 + kMaxAngleColumns + 3;  // design_id,n,angles,lr,tiles,t
    if (header.size() != fixed + static_cast<std::size_t>(thermo::kChannelCount) ||
        header[0] != "design_id" || header[1] != "n" || header[2] != "angle_1")
        throw ConfigError("unexpected dataset header in " + path.string());

    SampleTable table;
    int grid_size = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = io::split_csv_line(line);
        if (fields.size() != header.size())
            throw ConfigError("row " + std::to_string(line_no) + " of " + path.string() +
                              " has the wrong field count");

        const int n = static_cast<int>(parse_double(fields[1], "n"));
        if (grid_size == 0) {
            grid_size = n;
            table.feature_names = design::feature_names(n);
            table.target_names.assign(thermo::kChannelNames.begin(), thermo::kChannelNames.end());
        } else if (n != grid_size) {
            throw ConfigError("mixed grid sizes in " + path.string());
        }
        const int classes = design::angle_class_count(n);
        for (int a = 0; a < classes; ++a)
            table.features.push_back(parse_double(fields[static_cast<std::size_t>(2 + a)], "angle"));
        for (int a = classes; a < kMaxAngleColumns; ++a)
            if (!fields[static_cast<std::size_t>(2 + a)].empty())
                throw ConfigError("unused angle column filled in " + path.string());
        table.features.push_back(parse_double(fields[2 + kMaxAngleColumns], "lr"));
        table.features.push_back(parse_double(fields[3 + kMaxAngleColumns], "tiles"));
        const double t = parse_double(fields[4 + kMaxAngleColumns], "t");
        table.features.push_back(t);

        for (int c = 0; c < thermo::kChannelCount; ++c)
            table.targets.push_back(
                parse_double(fields[fixed + static_cast<std::size_t>(c)], "target"));

        const auto id = static_cast<std::int64_t>(parse_double(fields[0], "design_id"));
        table.provenance.push_back({id, t});
    }
    if (table.rows() == 0) throw ConfigError("dataset has no rows: " + path.string());
    if (grid_size_out) *grid_size_out = grid_size;
    return table;
}

}  // namespace interlock::data
