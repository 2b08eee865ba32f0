#include "affectlab/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace affectlab {

Checkpoint Checkpoint::capture(const ParameterSet& params, std::size_t step) {
    Checkpoint ckpt;
    ckpt.step = step;
    for (const auto& [name, t] : params) ckpt.params[name] = {t.shape(), t.to_vector()};
    return ckpt;
}

std::string Checkpoint::to_json() const {
    // hand-rolled writer: the JSON library picks its own float formatting
    fmt::memory_buffer out;
    fmt::format_to(std::back_inserter(out), "{{\"format_version\":{},\"step\":{},\"params\":{{", kFormatVersion, step);
    bool first = true;
    for (const auto& [name, rec] : params) {
        if (!first) out.push_back(',');
        first = false;
        fmt::format_to(std::back_inserter(out), "{}:{{\"shape\":[{}],\"data\":[", nlohmann::json(name).dump(),
                       fmt::join(rec.shape, ","));
        for (std::size_t i = 0; i < rec.data.size(); ++i) {
            if (!std::isfinite(rec.data[i])) throw StateError("non-finite value in parameter " + name);
            if (i) out.push_back(',');
            // a bare "-0" would parse back as the integer 0
            if (rec.data[i] == 0.0 && std::signbit(rec.data[i])) {
                fmt::format_to(std::back_inserter(out), "-0.0");
            } else {
                fmt::format_to(std::back_inserter(out), "{:.17g}", rec.data[i]);
            }
        }
        fmt::format_to(std::back_inserter(out), "]}}");
    }
    fmt::format_to(std::back_inserter(out), "}}}}\n");
    return fmt::to_string(out);
}

Checkpoint Checkpoint::from_json(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format_version").get<int>() != kFormatVersion) {
        throw std::runtime_error(fmt::format("unsupported checkpoint format_version {}", doc.at("format_version").dump()));
    }
    Checkpoint ckpt;
    ckpt.step = doc.at("step").get<std::size_t>();
    for (const auto& [name, rec] : doc.at("params").items()) {
        TensorRecord r{rec.at("shape").get<Shape>(), rec.at("data").get<std::vector<double>>()};
        if (shape_numel(r.shape) != r.data.size()) {
            throw DimensionError(fmt::format("checkpoint tensor {}: shape {} does not match {} values", name,
                                             shape_to_string(r.shape), r.data.size()));
        }
        ckpt.params.emplace(name, std::move(r));
    }
    return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + tmp.string());
        out << to_json();
        if (!out.flush()) throw std::runtime_error("failed writing checkpoint: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void Checkpoint::restore(ParameterSet& params) const {
    for (auto& [name, t] : params) {
        auto it = this->params.find(name);
        if (it == this->params.end()) throw DimensionError("checkpoint is missing tensor " + name);
        if (it->second.shape != t.shape()) {
            throw DimensionError(fmt::format("tensor {}: checkpoint shape {} vs model shape {}", name,
                                             shape_to_string(it->second.shape), shape_to_string(t.shape())));
        }
    }
    for (const auto& [name, _] : this->params) {
        if (!params.contains(name)) throw DimensionError("checkpoint has unknown tensor " + name);
    }
    for (auto& [name, t] : params) {
        const auto& src = this->params.at(name).data;
        std::copy(src.begin(), src.end(), t.mutable_data().begin());
    }
}

}  // namespace affectlab
