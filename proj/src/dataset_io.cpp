#include "gazecrop/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace gazecrop {

using nlohmann::json;
namespace fs = std::filesystem;

bool same_fields(const Sample& a, const Sample& b) {
  return a.sample_id == b.sample_id && a.image_path == b.image_path &&
         a.gaze_points == b.gaze_points && a.question == b.question &&
         a.reference_answer == b.reference_answer && a.caption == b.caption &&
         a.text_token_count == b.text_token_count;
}

namespace {

enum class GazeUnits { kPixels, kNormalized };

[[noreturn]] void invalid(const std::string& sample_id, std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::kValidationError,
              "sample '" + sample_id + "' (line " + std::to_string(line_no) + "): " + why);
}

std::string required_string(const json& j, const char* key, const std::string& id, std::size_t line,
                            bool allow_empty) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) invalid(id, line, std::string("missing string field '") + key + "'");
  std::string v = it->get<std::string>();
  if (!allow_empty && v.empty()) invalid(id, line, std::string("field '") + key + "' is empty");
  return v;
}

bool safe_sample_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    if (c == '/' || c == '\\' || static_cast<unsigned char>(c) < 0x20) return false;
  }
  return true;
}

Sample parse_sample(const json& j, std::size_t line_no, GazeUnits units, const fs::path& base_dir) {
  Sample s;
  s.line_no = line_no;
  if (!j.is_object()) invalid("?", line_no, "sample line is not a JSON object");
  const auto id_it = j.find("sample_id");
  if (id_it == j.end() || !id_it->is_string()) invalid("?", line_no, "missing string field 'sample_id'");
  s.sample_id = id_it->get<std::string>();
  if (!safe_sample_id(s.sample_id)) invalid(s.sample_id, line_no, "sample_id is not usable as a directory name");

  s.image_path = required_string(j, "image_path", s.sample_id, line_no, false);
  s.question = required_string(j, "question", s.sample_id, line_no, false);
  s.reference_answer = required_string(j, "reference_answer", s.sample_id, line_no, false);
  if (j.contains("caption")) s.caption = required_string(j, "caption", s.sample_id, line_no, true);
  if (const auto t = j.find("text_token_count"); t != j.end() && !t->is_null()) {
    if (!t->is_number_integer() || t->get<std::int64_t>() < 0) {
      invalid(s.sample_id, line_no, "text_token_count must be a non-negative integer");
    }
    s.text_token_count = t->get<std::int64_t>();
  }

  const auto g = j.find("gaze_points");
  if (g == j.end() || !g->is_array()) invalid(s.sample_id, line_no, "missing array field 'gaze_points'");
  if (g->empty()) invalid(s.sample_id, line_no, "gaze_points is empty");
  for (const json& p : *g) {
    if (!p.is_array() || (p.size() != 2 && p.size() != 3)) {
      invalid(s.sample_id, line_no, "gaze point must be [x, y] or [x, y, t]");
    }
    for (const json& v : p) {
      if (!v.is_number()) invalid(s.sample_id, line_no, "gaze point has a non-numeric entry");
    }
    GazePoint gp{p[0].get<double>(), p[1].get<double>(), std::nullopt};
    if (p.size() == 3) gp.t = p[2].get<double>();
    s.gaze_points.push_back(gp);
  }

  const fs::path image = fs::path(s.image_path).is_absolute() ? fs::path(s.image_path)
                                                              : base_dir / s.image_path;
  if (!fs::exists(image)) {
    throw Error(ErrorCode::kMissingImage,
                "sample '" + s.sample_id + "' (line " + std::to_string(line_no) +
                    "): image not found: " + image.string());
  }
  ImageSize size;
  try {
    size = probe_image_size(image);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMissingImage, "sample '" + s.sample_id + "' (line " +
                                              std::to_string(line_no) + "): unreadable image: " +
                                              e.what());
  }
  s.image_width = size.width;
  s.image_height = size.height;

  if (units == GazeUnits::kNormalized) {
    for (GazePoint& p : s.gaze_points) {
      p.x *= size.width;
      p.y *= size.height;
    }
  }
  try {
    GazeTrace trace(s.gaze_points, size.width, size.height);
    s.gaze_points = trace.points();
    s.clamped_points = trace.clamped_count();
  } catch (const Error& e) {
    invalid(s.sample_id, line_no, e.what());
  }
  return s;
}

std::string sample_id_hint(const json& j) {
  if (j.is_object()) {
    if (auto it = j.find("sample_id"); it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return "?";
}

}  // namespace

Manifest load_manifest(const fs::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  GazeUnits units = GazeUnits::kPixels;
  std::map<std::string, std::size_t> seen;
  bool first_record = true;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (first_record && j.is_object() && j.contains("manifest")) {
      first_record = false;
      const json& h = j["manifest"];
      if (!h.is_object()) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad manifest header");
      }
      m.source_name = h.value("source_name", m.source_name);
      m.version = h.value("version", m.version);
      const std::string u = h.value("gaze_units", std::string("pixels"));
      if (u == "normalized") {
        units = GazeUnits::kNormalized;
      } else if (u != "pixels") {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) +
                                                ": gaze_units must be 'pixels' or 'normalized'");
      }
      continue;
    }
    first_record = false;

    try {
      Sample s = parse_sample(j, line_no, units, m.base_dir);
      if (const auto it = seen.find(s.sample_id); it != seen.end()) {
        throw Error(ErrorCode::kValidationError, "sample '" + s.sample_id +
                                                     "': duplicate sample_id on lines " +
                                                     std::to_string(it->second) + " and " +
                                                     std::to_string(line_no));
      }
      seen.emplace(s.sample_id, line_no);
      m.samples.push_back(std::move(s));
    } catch (const Error& e) {
      if (options.strict) throw;
      m.rejected.push_back({sample_id_hint(j), line_no, e.code(), e.what()});
    }
  }
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ostringstream out;
  json header;
  header["manifest"] = {{"source_name", manifest.source_name},
                        {"version", manifest.version},
                        {"gaze_units", "pixels"}};
  out << header.dump() << '\n';
  for (const Sample& s : manifest.samples) {
    json j;
    j["sample_id"] = s.sample_id;
    j["image_path"] = s.image_path;
    j["question"] = s.question;
    j["reference_answer"] = s.reference_answer;
    j["caption"] = s.caption;
    if (s.text_token_count) j["text_token_count"] = *s.text_token_count;
    json pts = json::array();
    for (const GazePoint& p : s.gaze_points) {
      pts.push_back(p.t ? json::array({p.x, p.y, *p.t}) : json::array({p.x, p.y}));
    }
    j["gaze_points"] = std::move(pts);
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

fs::path resolve_image_path(const Manifest& manifest, const Sample& sample) {
  const fs::path p(sample.image_path);
  return p.is_absolute() ? p : manifest.base_dir / p;
}

const Sample* find_sample(const Manifest& manifest, std::string_view sample_id) {
  for (const Sample& s : manifest.samples) {
    if (s.sample_id == sample_id) return &s;
  }
  return nullptr;
}

GazeTrace make_trace(const Sample& sample) {
  return GazeTrace(sample.gaze_points, sample.image_width, sample.image_height);
}

double round_sig6(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return std::strtod(buf, nullptr);
}

std::string dump_json(const json& value) { return value.dump(2) + "\n"; }
std::string dump_json_line(const json& value) { return value.dump(); }

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json view_json(const ScaledView& v, int pitch) {
  return {{"width", v.width()},
          {"height", v.height()},
          {"tokens", static_cast<std::int64_t>(v.width() / pitch) * (v.height() / pitch)}};
}

json box_json(const RoiBox& b) {
  return {{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1},
          {"rho", round_sig6(b.rho)}, {"covered_mass", round_sig6(b.covered_mass)}};
}

}  // namespace

fs::path export_bundle(const Sample& sample, const TwoScaleInput& input, const CostReport& cost,
                       const fs::path& out_dir, const BundleContext& context) {
  const fs::path dir = out_dir / sample.sample_id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  if (context.token_pitch < 1) throw Error(ErrorCode::kBadTarget, "token pitch must be >= 1");
  json images = json::array();
  json views = json::object();
  if (input.global_view) {
    write_png(dir / "global.png", input.global_view->pixels);
    images.push_back("global.png");
    views["global"] = view_json(*input.global_view, context.token_pitch);
  }
  const char* main_name = input.mode == InputMode::kBaseline ? "full.png" : "roi.png";
  write_png(dir / main_name, input.roi_view.pixels);
  images.push_back(main_name);
  views[std::string(view_role_name(input.roi_view.role))] =
      view_json(input.roi_view, context.token_pitch);
  write_text_file(dir / "prompt.txt", input.prompt_text);

  json meta;
  meta["sample_id"] = sample.sample_id;
  meta["mode"] = input_mode_name(input.mode);
  meta["template_version"] = input.template_version;
  meta["images"] = images;
  meta["manifest_version"] = context.manifest_version;
  meta["profile"] = context.profile_name;
  meta["seed"] = context.seed;
  meta["sigma_px"] = round_sig6(context.sigma_px);
  meta["rho"] = context.rho ? json(round_sig6(*context.rho)) : json(nullptr);
  meta["box"] = context.box ? box_json(*context.box) : json(nullptr);
  meta["support_mass"] = context.support_mass ? json(round_sig6(*context.support_mass)) : json(nullptr);
  meta["image_size"] = {{"width", sample.image_width}, {"height", sample.image_height}};
  meta["tokens"] = {{"visual", round_sig6(cost.visual_tokens)},
                    {"text", round_sig6(cost.text_tokens)},
                    {"total", round_sig6(cost.total_tokens)}};
  meta["flops_g"] = round_sig6(cost.flops_g);
  meta["views"] = views;
  write_text_file(dir / "meta.json", dump_json(meta));
  return dir;
}

json to_json(const ResultRow& r) {
  json j;
  j["sample_id"] = r.sample_id;
  j["rho"] = r.rho ? json(round_sig6(*r.rho)) : json(nullptr);
  j["mode"] = r.mode;
  j["visual_tokens"] = r.visual_tokens;
  j["total_tokens"] = r.total_tokens;
  j["flops_g"] = round_sig6(r.flops_g);
  j["roi_pixels"] = r.roi_pixels;
  j["verdict"] = r.verdict ? json(*r.verdict) : json(nullptr);
  j["total_score"] = r.total_score ? json(round_sig6(*r.total_score)) : json(nullptr);
  j["answer"] = r.answer ? json(*r.answer) : json(nullptr);
  return j;
}

ResultRow result_row_from_json(const json& j) {
  ResultRow r;
  r.sample_id = j.at("sample_id").get<std::string>();
  if (j.contains("rho") && !j["rho"].is_null()) r.rho = j["rho"].get<double>();
  r.mode = j.value("mode", std::string());
  r.visual_tokens = j.value("visual_tokens", std::int64_t{0});
  r.total_tokens = j.value("total_tokens", std::int64_t{0});
  r.flops_g = j.value("flops_g", 0.0);
  r.roi_pixels = j.value("roi_pixels", std::int64_t{0});
  if (j.contains("verdict") && !j["verdict"].is_null()) r.verdict = j["verdict"].get<std::string>();
  if (j.contains("total_score") && !j["total_score"].is_null()) {
    r.total_score = j["total_score"].get<double>();
  }
  if (j.contains("answer") && !j["answer"].is_null()) r.answer = j["answer"].get<std::string>();
  return r;
}

std::vector<ResultRow> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open results " + path.string());
  std::vector<ResultRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(result_row_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void write_results(const fs::path& path, const std::vector<ResultRow>& rows) {
  std::string text;
  for (const ResultRow& r : rows) text += dump_json_line(to_json(r)) + "\n";
  write_text_file(path, text);
}

}  // namespace gazecrop
