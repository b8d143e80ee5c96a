#include "autorubric/sandbox/trace_io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <limits>

#include "autorubric/core/jsonl.hpp"

namespace autorubric::sandbox {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

Json to_json(const TraceRecord& r) {
  Json j;
  j["step"] = r.step;
  j["answer_reward_mean"] = r.answer_reward_mean;
  j["rubric_reward_mean"] = r.rubric_reward_mean;
  j["mean_length"] = r.mean_length;
  j["faithful_mass"] = r.faithful_mass;
  j["sampled_reward_mean"] = r.sampled_reward_mean;
  return j;
}

TraceRecord trace_record_from_json(const Json& j) {
  try {
    TraceRecord r;
    r.step = j.at("step").get<std::size_t>();
    r.answer_reward_mean = j.at("answer_reward_mean").get<double>();
    r.rubric_reward_mean = j.at("rubric_reward_mean").get<double>();
    r.mean_length = j.at("mean_length").get<double>();
    r.faithful_mass = j.at("faithful_mass").get<double>();
    r.sampled_reward_mean = j.value("sampled_reward_mean", 0.0);
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("trace record: ") + e.what());
  }
}

void write_trace(const std::filesystem::path& path, const TrainingTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) out += dump_line(to_json(r)) + "\n";
  write_file_atomic(path, out);
}

TrainingTrace read_trace(const std::filesystem::path& path) {
  TrainingTrace trace;
  for (const auto& j : read_jsonl(path)) trace.records.push_back(trace_record_from_json(j));
  return trace;
}

std::string render_svg(const std::vector<PlotSeries>& series) {
  struct Panel {
    const char* title;
    std::function<double(const TraceRecord&)> field;
  };
  const std::array<Panel, 4> panels = {{
      {"answer reward", [](const TraceRecord& r) { return r.answer_reward_mean; }},
      {"rubric reward", [](const TraceRecord& r) { return r.rubric_reward_mean; }},
      {"response length", [](const TraceRecord& r) { return r.mean_length; }},
      {"faithful mass", [](const TraceRecord& r) { return r.faithful_mass; }},
  }};
  constexpr double kW = 420, kH = 260, kPad = 40;
  const double width = kW * 2, height = kH * 2 + 30;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
                    fmt(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double ox = kW * static_cast<double>(p % 2);
    const double oy = kH * static_cast<double>(p / 2);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t max_steps = 1;
    for (const auto& s : series) {
      for (const auto& r : s.trace.records) {
        lo = std::min(lo, panels[p].field(r));
        hi = std::max(hi, panels[p].field(r));
      }
      max_steps = std::max(max_steps, s.trace.records.size());
    }
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;

    const double x0 = ox + kPad, y0 = oy + kPad, pw = kW - 2 * kPad, ph = kH - 2 * kPad;
    svg += "<text x=\"" + fmt(x0) + "\" y=\"" + fmt(y0 - 10) + "\" font-weight=\"bold\">" + panels[p].title +
           "</text>\n";
    svg += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
           "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg += "<text x=\"" + fmt(x0 - 4) + "\" y=\"" + fmt(y0 + 4) + "\" text-anchor=\"end\">" + fmt(hi) + "</text>\n";
    svg += "<text x=\"" + fmt(x0 - 4) + "\" y=\"" + fmt(y0 + ph) + "\" text-anchor=\"end\">" + fmt(lo) + "</text>\n";
    svg += "<text x=\"" + fmt(x0 + pw) + "\" y=\"" + fmt(y0 + ph + 14) + "\" text-anchor=\"end\">step " +
           std::to_string(max_steps) + "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
      const auto& recs = series[s].trace.records;
      if (recs.empty()) continue;
      std::string pts;
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const double x = x0 + pw * (max_steps > 1 ? static_cast<double>(i) / static_cast<double>(max_steps - 1) : 0);
        const double y = y0 + ph * (1.0 - (panels[p].field(recs[i]) - lo) / (hi - lo));
        pts += fmt(x) + "," + fmt(y) + " ";
      }
      svg += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(kColors[s % kColors.size()]) +
             "\" points=\"" + pts + "\"/>\n";
    }
  }

  double lx = kPad;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const std::string color = kColors[s % kColors.size()];
    svg += "<rect x=\"" + fmt(lx) + "\" y=\"" + fmt(height - 22) + "\" width=\"12\" height=\"12\" fill=\"" + color +
           "\"/>\n";
    svg += "<text x=\"" + fmt(lx + 16) + "\" y=\"" + fmt(height - 12) + "\">" + escape_xml(series[s].label) +
           "</text>\n";
    lx += 30 + 7.0 * static_cast<double>(series[s].label.size());
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace autorubric::sandbox
