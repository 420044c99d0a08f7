#pragma once

#include "aescope/control/control.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aescope::workflow {

/// Semantic parameter and output types. JSON shapes:
/// point [x, y]; points [[x, y], ...]; region [x0, y0, x1, y1];
/// image [[...], ...] (rows); pixels [[row, col], ...]; number_list [v, ...];
/// trajectory {samples, sample_rate_hz, closed}; spectrum {frequency_hz, amplitude, phase_rad};
/// dataset_ref "id"; object: any JSON object.
enum class ParamType {
    number,
    integer,
    string,
    boolean,
    point,
    points,
    region,
    image,
    pixels,
    number_list,
    string_list,
    trajectory,
    spectrum,
    dataset_ref,
    object,
};

std::string_view to_string(ParamType t);
/// Empty when `v` has the shape of `t`, otherwise the reason.
std::optional<std::string> check_type(ParamType t, const json& v);
/// Whether an output of type `from` may feed a parameter of type `to`.
bool assignable(ParamType from, ParamType to);

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::number;
    bool required = false;
    json default_value;  // null when the parameter has no default
    std::string description;
    std::vector<std::string> choices;  // allowed values for string parameters
};

struct OutputSpec {
    std::string name;
    ParamType type = ParamType::number;
    std::string description;
    bool indexed = false;  // a family "<name><k>" for k = 0, 1, ...
};

struct ExecContext {
    control::ControlApi& api;
};

using Executor = std::function<json(ExecContext&, const json& params)>;

struct ToolSpec {
    std::string name;
    std::string category;  // instrument | trajectory | analysis
    std::string description;
    std::vector<ParamSpec> params;
    std::vector<OutputSpec> outputs;
    bool requires_be = false;
    Executor exec;

    const ParamSpec* param(std::string_view n) const;
    /// Matches plain outputs and indexed families ("x_3" against "x_").
    const OutputSpec* output(std::string_view n) const;
    bool is_instrument_op() const { return category == "instrument"; }
};

class ToolRegistry {
public:
    void add(ToolSpec spec);
    const ToolSpec* find(std::string_view name) const;
    const std::vector<ToolSpec>& tools() const { return tools_; }
    std::vector<std::string> names() const;

private:
    std::vector<ToolSpec> tools_;
};

/// Every control, trajectory and analysis operation with its executor.
const ToolRegistry& default_registry();

/// Fills absent parameters from their declared defaults.
json with_defaults(const ToolSpec& spec, const json& params);

/// Runs one tool on already-bound parameters: defaults filled, unknown
/// parameters and type errors rejected with Error(invalid_params).
json run_tool(const ToolSpec& spec, ExecContext& ctx, const json& params);

/// JSON-schema-like description of a tool for prompts and list_tools.
json tool_schema(const ToolSpec& spec);

/// Pixel coordinates to raster positions: x = x0 + col·(x1 - x0)/(nx - 1), same for y.
std::vector<Point> pixels_to_um(const std::vector<PixelIndex>& pixels, const Region& region, int ny, int nx);

/// Uniform-stride subsample of `n` items down to `max_count` indices. When there
/// are fewer items than requested the indices wrap around cyclically.
std::vector<std::size_t> uniform_stride(std::size_t n, std::size_t max_count);

}  // namespace aescope::workflow
