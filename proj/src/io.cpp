#include "apcdet/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "apcdet/errors.hpp"

namespace apcdet {
namespace io {

using nlohmann::json;

namespace {

[[noreturn]] void fail_line(const std::string& path, std::size_t line, const std::string& what) {
  throw ValidationError(path + ":" + std::to_string(line) + ": " + what);
}

json parse_line(const std::string& path, std::size_t line_number, const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& error) {
    fail_line(path, line_number, std::string("malformed JSON (") + error.what() + ")");
  }
}

double require_finite(const std::string& path, std::size_t line, const json& value,
                      const char* field) {
  if (!value.is_number()) fail_line(path, line, std::string(field) + " must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) fail_line(path, line, std::string(field) + " must be finite");
  return v;
}

Box parse_box(const std::string& path, std::size_t line, const json& value) {
  if (!value.is_array() || value.size() != 4) {
    fail_line(path, line, "box must be an array of four numbers");
  }
  return {require_finite(path, line, value[0], "box[0]"),
          require_finite(path, line, value[1], "box[1]"),
          require_finite(path, line, value[2], "box[2]"),
          require_finite(path, line, value[3], "box[3]")};
}

json box_to_json(const Box& box) { return json::array({box.cx, box.cy, box.w, box.h}); }

const json& require_field(const std::string& path, std::size_t line, const json& object,
                          const char* field) {
  const auto it = object.find(field);
  if (it == object.end()) fail_line(path, line, std::string("missing field ") + field);
  return *it;
}

ClassVocabulary parse_header(const std::string& path, const json& header) {
  if (!header.is_object() || !header.contains("classes")) {
    fail_line(path, 1, "header must be an object with a \"classes\" array");
  }
  const json& classes = header["classes"];
  if (!classes.is_array() || classes.empty()) {
    fail_line(path, 1, "\"classes\" must be a nonempty array");
  }
  ClassVocabulary vocabulary;
  for (const auto& name : classes) {
    if (!name.is_string()) fail_line(path, 1, "class names must be strings");
    vocabulary.names.push_back(name.get<std::string>());
  }
  std::set<std::string> unique(vocabulary.names.begin(), vocabulary.names.end());
  if (unique.size() != vocabulary.names.size()) {
    fail_line(path, 1, "class names must be unique");
  }
  return vocabulary;
}

json header_to_json(const ClassVocabulary& vocabulary) {
  return json{{"classes", vocabulary.names}};
}

// Reads nonempty lines; the callback receives (line_number, parsed json).
template <typename Callback>
ClassVocabulary read_jsonl(const std::string& path, Callback&& on_record) {
  std::ifstream stream(path);
  if (!stream) throw ValidationError("cannot open " + path);
  std::string line;
  std::size_t line_number = 0;
  bool have_header = false;
  ClassVocabulary vocabulary;
  while (std::getline(stream, line)) {
    ++line_number;
    if (line.empty()) continue;
    const json record = parse_line(path, line_number, line);
    if (!have_header) {
      vocabulary = parse_header(path, record);
      have_header = true;
      continue;
    }
    if (!record.is_object()) fail_line(path, line_number, "record must be an object");
    try {
      on_record(line_number, record, vocabulary);
    } catch (const json::exception& error) {
      fail_line(path, line_number, std::string("invalid record (") + error.what() + ")");
    }
  }
  if (!have_header) throw ValidationError(path + ": missing header line");
  return vocabulary;
}

struct FileCloser {
  std::FILE* file = nullptr;
  ~FileCloser() {
    if (file) std::fclose(file);
  }
};

ImageRaster load_ppm(const std::string& path, std::FILE* file) {
  std::fseek(file, 0, SEEK_SET);
  const auto next_token = [&]() -> std::string {
    std::string token;
    int c;
    while ((c = std::fgetc(file)) != EOF) {
      if (c == '#') {  // comment to end of line
        while ((c = std::fgetc(file)) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!token.empty()) break;
        continue;
      }
      token.push_back(static_cast<char>(c));
    }
    if (token.empty()) throw ValidationError(path + ": truncated PPM header");
    return token;
  };

  if (next_token() != "P6") throw ValidationError(path + ": not a binary PPM");
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (width < 1 || height < 1) throw ValidationError(path + ": invalid PPM dimensions");
  if (maxval != 255) throw ValidationError(path + ": only maxval 255 PPM is supported");

  ImageRaster raster = make_raster(width, height, 3);
  const std::size_t pixel_bytes = static_cast<std::size_t>(width) * height * 3;
  std::vector<unsigned char> bytes(pixel_bytes);
  if (std::fread(bytes.data(), 1, pixel_bytes, file) != pixel_bytes) {
    throw ValidationError(path + ": truncated PPM pixel data");
  }
  for (std::size_t i = 0; i < pixel_bytes; ++i) {
    raster.data[i] = bytes[i] / 255.0;
  }
  return raster;
}

ImageRaster load_png(const std::string& path, std::FILE* file) {
  std::fseek(file, 0, SEEK_SET);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: failed to allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png: failed to allocate info struct");
  }

  std::vector<png_bytep> row_pointers;
  std::vector<unsigned char> pixels;
  int width = 0, height = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(path + ": corrupt or truncated PNG");
  }

  png_init_io(png, file);
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(path + ": unsupported PNG channel layout");
  }

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * static_cast<std::size_t>(height));
  row_pointers.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    row_pointers[static_cast<std::size_t>(y)] = pixels.data() + row_bytes * static_cast<std::size_t>(y);
  }
  png_read_image(png, row_pointers.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageRaster raster = make_raster(width, height, channels);
  for (int y = 0; y < height; ++y) {
    const unsigned char* row = pixels.data() + row_bytes * static_cast<std::size_t>(y);
    for (int x = 0; x < width * channels; ++x) {
      raster.data[(static_cast<std::size_t>(y) * width * channels) + x] = row[x] / 255.0;
    }
  }
  return raster;
}

void check_keys(const json& section, const std::set<std::string>& allowed,
                const std::string& name) {
  if (!section.is_object()) {
    throw ValidationError("config: section \"" + name + "\" must be an object");
  }
  for (const auto& [key, value] : section.items()) {
    if (!allowed.count(key)) {
      throw ValidationError("config: unknown key \"" + key + "\" in section \"" + name + "\"");
    }
  }
}

template <typename T>
void read_if(const json& section, const char* key, T& target) {
  const auto it = section.find(key);
  if (it != section.end() && !it->is_null()) target = it->get<T>();
}

}  // namespace

int ClassVocabulary::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

DetectionDump load_dump(const std::string& path) {
  DetectionDump dump;
  std::vector<std::string> image_order;
  dump.classes = read_jsonl(path, [&](std::size_t line, const json& record,
                                      const ClassVocabulary& vocabulary) {
    const std::string image_id =
        require_field(path, line, record, "image_id").get<std::string>();
    const json& scores = require_field(path, line, record, "scores");
    if (!scores.is_array() ||
        scores.size() != static_cast<std::size_t>(vocabulary.class_count())) {
      fail_line(path, line, "scores must have one entry per class");
    }
    DetectionRow row;
    row.scores.reserve(scores.size());
    for (const auto& s : scores) {
      row.scores.push_back(require_finite(path, line, s, "score"));
    }
    row.box = parse_box(path, line, require_field(path, line, record, "box"));

    auto it = std::find(image_order.begin(), image_order.end(), image_id);
    if (it == image_order.end()) {
      image_order.push_back(image_id);
      dump.images.push_back({image_id, {}});
      it = image_order.end() - 1;
    }
    dump.images[static_cast<std::size_t>(it - image_order.begin())].rows.push_back(
        std::move(row));
  });
  return dump;
}

void save_dump(const std::string& path, const DetectionDump& dump) {
  std::ofstream stream(path);
  if (!stream) throw ValidationError("cannot write " + path);
  stream << header_to_json(dump.classes).dump() << '\n';
  for (const auto& image : dump.images) {
    for (const auto& row : image.rows) {
      stream << json{{"image_id", image.image_id},
                     {"scores", row.scores},
                     {"box", box_to_json(row.box)}}
                    .dump()
             << '\n';
    }
  }
}

AnnotationFile load_annotations(const std::string& path) {
  AnnotationFile annotations;
  annotations.classes = read_jsonl(path, [&](std::size_t line, const json& record,
                                             const ClassVocabulary& vocabulary) {
    AnnotationItem item;
    item.image_id = require_field(path, line, record, "image_id").get<std::string>();
    item.label = require_field(path, line, record, "label").get<std::string>();
    const int index = vocabulary.index_of(item.label);
    if (index < 0) fail_line(path, line, "label \"" + item.label + "\" not in header classes");
    if (index == kBackgroundClass) {
      fail_line(path, line, "label \"" + item.label + "\" is the background class");
    }
    item.box = parse_box(path, line, require_field(path, line, record, "box"));
    annotations.items.push_back(std::move(item));
  });
  return annotations;
}

void save_annotations(const std::string& path, const AnnotationFile& annotations) {
  std::ofstream stream(path);
  if (!stream) throw ValidationError("cannot write " + path);
  stream << header_to_json(annotations.classes).dump() << '\n';
  for (const auto& item : annotations.items) {
    stream << json{{"image_id", item.image_id},
                   {"label", item.label},
                   {"box", box_to_json(item.box)}}
                  .dump()
           << '\n';
  }
}

FinalDetectionFile load_detections(const std::string& path) {
  FinalDetectionFile detections;
  detections.classes = read_jsonl(path, [&](std::size_t line, const json& record,
                                            const ClassVocabulary& vocabulary) {
    FinalDetectionRecord item;
    item.image_id = require_field(path, line, record, "image_id").get<std::string>();
    item.class_name = require_field(path, line, record, "class").get<std::string>();
    const int index = vocabulary.index_of(item.class_name);
    if (index < 0) {
      fail_line(path, line, "class \"" + item.class_name + "\" not in header classes");
    }
    if (index == kBackgroundClass) {
      fail_line(path, line, "final detections cannot carry the background class");
    }
    item.confidence = require_finite(path, line,
                                     require_field(path, line, record, "confidence"),
                                     "confidence");
    item.box = parse_box(path, line, require_field(path, line, record, "box"));
    item.source_row = require_field(path, line, record, "source_row").get<std::size_t>();
    detections.records.push_back(std::move(item));
  });
  return detections;
}

void save_detections(const std::string& path, const FinalDetectionFile& detections) {
  std::ofstream stream(path);
  if (!stream) throw ValidationError("cannot write " + path);
  stream << header_to_json(detections.classes).dump() << '\n';
  for (const auto& record : detections.records) {
    stream << json{{"image_id", record.image_id},
                   {"class", record.class_name},
                   {"confidence", record.confidence},
                   {"box", box_to_json(record.box)},
                   {"source_row", record.source_row}}
                  .dump()
           << '\n';
  }
}

ImageRaster load_image(const std::string& path) {
  FileCloser holder{std::fopen(path.c_str(), "rb")};
  if (!holder.file) throw ValidationError("cannot open " + path);
  unsigned char magic[8] = {};
  const std::size_t got = std::fread(magic, 1, sizeof(magic), holder.file);

  static const unsigned char png_magic[8] = {0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A};
  if (got >= 8 && std::equal(magic, magic + 8, png_magic)) {
    return load_png(path, holder.file);
  }
  if (got >= 2 && magic[0] == 'P' && magic[1] == '6') {
    return load_ppm(path, holder.file);
  }
  char description[64];
  std::snprintf(description, sizeof(description), "0x%02X 0x%02X", magic[0], magic[1]);
  throw ValidationError(path + ": unsupported image format (magic bytes " + description + ")");
}

void save_ppm(const std::string& path, const ImageRaster& raster) {
  if (raster.channels != 3 && raster.channels != 1) {
    throw ValidationError("save_ppm: raster must have 1 or 3 channels");
  }
  std::ofstream stream(path, std::ios::binary);
  if (!stream) throw ValidationError("cannot write " + path);
  stream << "P6\n" << raster.width << " " << raster.height << "\n255\n";
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(raster.width) * raster.height * 3);
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = raster.at(x, y, raster.channels == 1 ? 0 : c);
        const double clamped = std::clamp(v, 0.0, 1.0);
        bytes.push_back(static_cast<unsigned char>(std::lround(clamped * 255.0)));
      }
    }
  }
  stream.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

ToolkitConfig parse_config(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& error) {
    throw ValidationError(std::string("config: malformed JSON (") + error.what() + ")");
  }
  check_keys(document, {"anchors", "hog", "apc", "suppression", "eval"}, "<root>");

  ToolkitConfig config;
  if (document.contains("anchors")) {
    const json& section = document["anchors"];
    check_keys(section,
               {"feature_maps", "scale_min", "scale_max", "aspect_ratios", "scale_after_last"},
               "anchors");
    read_if(section, "feature_maps", config.anchors.feature_maps);
    read_if(section, "scale_min", config.anchors.scale_min);
    read_if(section, "scale_max", config.anchors.scale_max);
    read_if(section, "aspect_ratios", config.anchors.aspect_ratios);
    if (section.contains("scale_after_last") && !section["scale_after_last"].is_null()) {
      config.anchors.scale_after_last = section["scale_after_last"].get<double>();
    }
  }
  if (document.contains("hog")) {
    const json& section = document["hog"];
    check_keys(section, {"patch_size", "cell_size", "block_cells", "bins", "clip", "epsilon"},
               "hog");
    HogConfig& hog = config.suppression.hog;
    read_if(section, "patch_size", hog.patch_size);
    read_if(section, "cell_size", hog.cell_size);
    read_if(section, "block_cells", hog.block_cells);
    read_if(section, "bins", hog.bins);
    read_if(section, "clip", hog.clip);
    read_if(section, "epsilon", hog.epsilon);
  }
  if (document.contains("apc")) {
    const json& section = document["apc"];
    check_keys(section, {"damping", "max_iter", "convergence_window"}, "apc");
    read_if(section, "damping", config.suppression.apc.damping);
    read_if(section, "max_iter", config.suppression.apc.max_iter);
    read_if(section, "convergence_window", config.suppression.apc.convergence_window);
  }
  if (document.contains("suppression")) {
    const json& section = document["suppression"];
    check_keys(section,
               {"appearance_weight", "confidence_floor", "per_class", "preference_mode",
                "similarity_convention", "nms_iou_threshold"},
               "suppression");
    read_if(section, "appearance_weight", config.suppression.appearance_weight);
    read_if(section, "confidence_floor", config.suppression.confidence_floor);
    read_if(section, "per_class", config.suppression.per_class);
    if (section.contains("preference_mode")) {
      const std::string mode = section["preference_mode"].get<std::string>();
      if (mode == "raw") {
        config.suppression.preference_mode = PreferenceMode::raw;
      } else if (mode == "scaled") {
        config.suppression.preference_mode = PreferenceMode::scaled;
      } else {
        throw ValidationError("config: preference_mode must be \"raw\" or \"scaled\"");
      }
    }
    if (section.contains("similarity_convention")) {
      const std::string mode = section["similarity_convention"].get<std::string>();
      if (mode == "literal") {
        config.suppression.similarity_convention = SimilarityConvention::literal;
      } else if (mode == "negated") {
        config.suppression.similarity_convention = SimilarityConvention::negated;
      } else {
        throw ValidationError("config: similarity_convention must be \"literal\" or \"negated\"");
      }
    }
    read_if(section, "nms_iou_threshold", config.suppression.nms_iou_threshold);
  }
  if (document.contains("eval")) {
    const json& section = document["eval"];
    check_keys(section, {"iou_threshold", "ap_mode"}, "eval");
    read_if(section, "iou_threshold", config.eval.iou_threshold);
    if (section.contains("ap_mode")) {
      const std::string mode = section["ap_mode"].get<std::string>();
      if (mode == "all_points") {
        config.eval.ap_mode = ApMode::all_points;
      } else if (mode == "eleven_point") {
        config.eval.ap_mode = ApMode::eleven_point;
      } else {
        throw ValidationError("config: ap_mode must be \"all_points\" or \"eleven_point\"");
      }
    }
  }
  return config;
}

ToolkitConfig load_config(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw ValidationError("cannot open " + path);
  std::stringstream buffer;
  buffer << stream.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_report(const EvalReport& report) {
  json classes = json::object();
  for (const auto& [name, entry] : report.per_class) {
    classes[name] = {{"ap", entry.ap},
                     {"defined", entry.defined},
                     {"gt_count", entry.gt_count},
                     {"detections", entry.detection_count},
                     {"tp", entry.true_positives},
                     {"fp", entry.false_positives}};
  }
  const json document = {{"map", report.map},
                         {"defined_classes", report.defined_class_count},
                         {"classes", classes}};
  return document.dump();
}

EvalReport parse_report(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& error) {
    throw ValidationError(std::string("report: malformed JSON (") + error.what() + ")");
  }
  if (!document.is_object() || !document.contains("map") || !document.contains("classes")) {
    throw ValidationError("report: expected an object with \"map\" and \"classes\"");
  }
  EvalReport report;
  report.map = document["map"].get<double>();
  if (document.contains("defined_classes")) {
    report.defined_class_count = document["defined_classes"].get<std::size_t>();
  }
  for (const auto& [name, entry] : document["classes"].items()) {
    ClassReport parsed;
    parsed.ap = entry.at("ap").get<double>();
    parsed.defined = entry.at("defined").get<bool>();
    parsed.gt_count = entry.at("gt_count").get<std::size_t>();
    parsed.detection_count = entry.at("detections").get<std::size_t>();
    parsed.true_positives = entry.at("tp").get<std::size_t>();
    parsed.false_positives = entry.at("fp").get<std::size_t>();
    report.per_class[name] = parsed;
  }
  return report;
}

void save_report(const std::string& path, const EvalReport& report) {
  std::ofstream stream(path);
  if (!stream) throw ValidationError("cannot write " + path);
  stream << serialize_report(report) << '\n';
}

EvalReport load_report(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw ValidationError("cannot open " + path);
  std::stringstream buffer;
  buffer << stream.rdbuf();
  return parse_report(buffer.str());
}

std::string serialize_comparison(const ComparisonReport& comparison) {
  json classes = json::object();
  for (const auto& [name, delta] : comparison.per_class) {
    classes[name] = {{"ap_a", delta.ap_a},
                     {"ap_b", delta.ap_b},
                     {"delta_points", delta.delta_points}};
  }
  const json document = {{"map_a", comparison.map_a},
                         {"map_b", comparison.map_b},
                         {"delta_points", comparison.delta_points},
                         {"classes", classes}};
  return document.dump();
}

Matrix load_similarity_csv(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw ValidationError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t consumed = 0;
        const double v = std::stod(field, &consumed);
        while (consumed < field.size() && std::isspace(field[consumed])) ++consumed;
        if (consumed != field.size()) throw std::invalid_argument(field);
        values.push_back(v);
      } catch (const std::exception&) {
        fail_line(path, line_number, "invalid number \"" + field + "\"");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ValidationError(path + ": empty similarity matrix");
  Matrix matrix(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) {
      throw ValidationError(path + ": similarity matrix must be square");
    }
    for (std::size_t j = 0; j < rows.size(); ++j) matrix(i, j) = rows[i][j];
  }
  return matrix;
}

}  // namespace io
}  // namespace apcdet
