#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "affectlab/nn.hpp"

namespace affectlab {

struct TensorRecord {
    Shape shape;
    std::vector<double> data;
};

/// On-disk parameter snapshot:
/// {"format_version":1, "step":N, "params":{name:{"shape":[...],"data":[...]}}}
/// Values are written with 17 significant digits, which round-trips float64 exactly.
struct Checkpoint {
    static constexpr int kFormatVersion = 1;

    std::size_t step = 0;
    std::map<std::string, TensorRecord> params;

    static Checkpoint capture(const ParameterSet& params, std::size_t step);

    std::string to_json() const;
    static Checkpoint from_json(const std::string& text);

    /// Writes via a temporary file and rename, so an interrupted write never
    /// clobbers an existing checkpoint.
    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

    /// Copies values into `params`. Throws DimensionError naming the first
    /// tensor whose shape differs, or that is missing on either side.
    void restore(ParameterSet& params) const;
};

}  // namespace affectlab
