#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "autorubric/sandbox/trainer.hpp"

namespace autorubric::sandbox {

Json to_json(const TraceRecord& r);
TraceRecord trace_record_from_json(const Json& j);

/// One JSON object per step.
void write_trace(const std::filesystem::path& path, const TrainingTrace& trace);
TrainingTrace read_trace(const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  TrainingTrace trace;
};

/// Static SVG with one panel per trace field (answer reward, rubric reward,
/// response length, faithful mass), one polyline per series.
std::string render_svg(const std::vector<PlotSeries>& series);

}  // namespace autorubric::sandbox
