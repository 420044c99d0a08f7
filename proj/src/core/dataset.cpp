#include "aescope/core/dataset.hpp"

#include "aescope/core/error.hpp"

#include <functional>
#include <numeric>

namespace aescope {

std::string to_string(DType d) {
    switch (d) {
    case DType::f64: return "f64";
    case DType::f32: return "f32";
    case DType::i32: return "i32";
    case DType::u8: return "u8";
    }
    return "f64";
}

DType dtype_from_string(const std::string& s) {
    if (s == "f64") return DType::f64;
    if (s == "f32") return DType::f32;
    if (s == "i32") return DType::i32;
    if (s == "u8") return DType::u8;
    throw Error(ErrorCode::invalid_value, "unknown dtype '" + s + "'");
}

std::size_t dtype_size(DType d) {
    switch (d) {
    case DType::f64: return 8;
    case DType::f32: return 4;
    case DType::i32: return 4;
    case DType::u8: return 1;
    }
    return 8;
}

std::size_t Channel::element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

const Channel& Dataset::channel(const std::string& name) const {
    auto it = channels.find(name);
    if (it == channels.end()) {
        throw Error(ErrorCode::missing_channel, "dataset has no channel '" + name + "'", json{{"channel", name}});
    }
    return it->second;
}

void validate(const Dataset& ds) {
    for (const auto& [name, ch] : ds.channels) {
        if (ch.shape.empty() || ch.element_count() != ch.data.size()) {
            throw Error(ErrorCode::shape_mismatch, "channel '" + name + "' shape does not match its data length",
                        json{{"channel", name}});
        }
    }
    if (ds.has(channels::raw_spectra)) {
        const auto& freq = ds.channel(channels::frequency);
        const auto& raw = ds.channel(channels::raw_spectra);
        if (raw.shape.back() != freq.data.size()) {
            throw Error(ErrorCode::shape_mismatch, "raw_spectra bin count differs from frequency_hz length");
        }
    }
}

}  // namespace aescope
