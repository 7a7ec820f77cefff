#include "canaleval/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "canaleval/error.hpp"

namespace canaleval {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::string_view to_string(DType dtype) noexcept { return dtype == DType::uint8 ? "uint8" : "float32"; }

std::size_t dtype_size(DType dtype) noexcept { return dtype == DType::uint8 ? 1 : 4; }

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double value, int decimals) {
  char buf[128];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  if (res.ec != std::errc()) throw Error(ErrorKind::invalid_input, "value too large to format");
  std::string out(buf, res.ptr);
  // "-0.000" would make byte-identical output depend on the sign of tiny values.
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

double round_fixed(double value, int decimals) {
  const std::string text = format_fixed(value, decimals);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io_error, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::io_error, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::io_error, "cannot rename into '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------- volumes

namespace {

constexpr std::string_view kVolumeMagic = "canaleval-volume 1";

[[noreturn]] void header_error(std::size_t offset, const std::string& what) {
  throw Error(ErrorKind::parse_error, "volume header, byte " + std::to_string(offset) + ": " + what);
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
T parse_number(std::string_view word, std::size_t offset, const std::string& key) {
  T value{};
  const auto res = std::from_chars(word.data(), word.data() + word.size(), value);
  if (res.ec != std::errc() || res.ptr != word.data() + word.size()) {
    header_error(offset, "bad number '" + std::string(word) + "' for " + key);
  }
  return value;
}

void to_little_endian_inplace(std::span<std::uint8_t> bytes, std::size_t width) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + width <= bytes.size(); i += width) std::reverse(bytes.begin() + i, bytes.begin() + i + width);
  } else {
    (void)bytes;
    (void)width;
  }
}

fs::path payload_path(const fs::path& header_path, const std::string& payload) {
  return header_path.parent_path() / payload;
}

std::vector<std::uint8_t> read_payload(const fs::path& header_path, const VolumeHeader& h) {
  const fs::path p = payload_path(header_path, h.payload);
  const std::string bytes = read_text_file(p);
  if (bytes.size() != h.payload_bytes) {
    throw Error(ErrorKind::parse_error, "payload '" + p.string() + "' has " + std::to_string(bytes.size()) +
                                            " bytes, expected " + std::to_string(h.payload_bytes));
  }
  std::vector<std::uint8_t> out(bytes.begin(), bytes.end());
  to_little_endian_inplace(out, dtype_size(h.dtype));
  return out;
}

void write_volume(const fs::path& header_path, VolumeHeader header, std::vector<std::uint8_t> payload) {
  fs::path raw = header_path;
  raw.replace_extension(".raw");
  header.payload = raw.filename().string();
  header.payload_bytes = payload.size();
  to_little_endian_inplace(payload, dtype_size(header.dtype));
  write_file_atomic(raw, std::string_view(reinterpret_cast<const char*>(payload.data()), payload.size()));
  write_file_atomic(header_path, format_volume_header(header));
}

}  // namespace

std::string format_volume_header(const VolumeHeader& h) {
  const auto& g = h.geometry;
  std::string out;
  out += kVolumeMagic;
  out += "\ndims " + std::to_string(g.dims[0]) + " " + std::to_string(g.dims[1]) + " " + std::to_string(g.dims[2]);
  out += "\nspacing_mm " + format_double(g.spacing_mm[0]) + " " + format_double(g.spacing_mm[1]) + " " +
         format_double(g.spacing_mm[2]);
  out += "\norigin_mm " + format_double(g.origin_mm.x) + " " + format_double(g.origin_mm.y) + " " +
         format_double(g.origin_mm.z);
  out += "\ndtype " + std::string(to_string(h.dtype));
  out += std::string("\nkind ") + (h.kind == VolumeKind::probability ? "probability" : "intensity");
  out += "\nbyte_order little";
  out += "\npayload " + h.payload;
  out += "\npayload_bytes " + std::to_string(h.payload_bytes) + "\n";
  return out;
}

VolumeHeader parse_volume_header(std::string_view text) {
  VolumeHeader h;
  std::size_t offset = 0;
  bool magic = false;
  std::vector<std::string> seen;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_offset = offset;
    offset = end + 1;

    const auto words = split_words(line);
    if (words.empty() || words.front().starts_with('#')) continue;
    if (!magic) {
      if (line != kVolumeMagic) header_error(line_offset, "expected '" + std::string(kVolumeMagic) + "'");
      magic = true;
      continue;
    }
    const std::string key(words.front());
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) header_error(line_offset, "duplicate key " + key);
    seen.push_back(key);
    const auto expect = [&](std::size_t n) {
      if (words.size() != n + 1) {
        header_error(line_offset, key + " expects " + std::to_string(n) + " value(s)");
      }
    };
    if (key == "dims") {
      expect(3);
      for (std::size_t a = 0; a < 3; ++a) h.geometry.dims[a] = parse_number<std::int64_t>(words[a + 1], line_offset, key);
    } else if (key == "spacing_mm") {
      expect(3);
      for (std::size_t a = 0; a < 3; ++a) h.geometry.spacing_mm[a] = parse_number<double>(words[a + 1], line_offset, key);
    } else if (key == "origin_mm") {
      expect(3);
      h.geometry.origin_mm = {parse_number<double>(words[1], line_offset, key),
                              parse_number<double>(words[2], line_offset, key),
                              parse_number<double>(words[3], line_offset, key)};
    } else if (key == "dtype") {
      expect(1);
      if (words[1] == "uint8") {
        h.dtype = DType::uint8;
      } else if (words[1] == "float32") {
        h.dtype = DType::float32;
      } else {
        header_error(line_offset, "unsupported dtype '" + std::string(words[1]) + "'");
      }
    } else if (key == "kind") {
      expect(1);
      if (words[1] == "probability") {
        h.kind = VolumeKind::probability;
      } else if (words[1] == "intensity") {
        h.kind = VolumeKind::intensity;
      } else {
        header_error(line_offset, "unknown kind '" + std::string(words[1]) + "'");
      }
    } else if (key == "byte_order") {
      expect(1);
      if (words[1] != "little") header_error(line_offset, "only little-endian payloads are supported");
    } else if (key == "payload") {
      expect(1);
      h.payload = std::string(words[1]);
    } else if (key == "payload_bytes") {
      expect(1);
      h.payload_bytes = parse_number<std::uint64_t>(words[1], line_offset, key);
    } else {
      header_error(line_offset, "unknown key '" + key + "'");
    }
  }
  if (!magic) header_error(0, "empty header");
  for (const char* required : {"dims", "spacing_mm", "origin_mm", "dtype", "payload", "payload_bytes"}) {
    if (std::find(seen.begin(), seen.end(), required) == seen.end()) {
      header_error(text.size(), std::string("missing key ") + required);
    }
  }
  try {
    validate(h.geometry);
  } catch (const Error& e) {
    header_error(0, e.what());
  }
  const std::uint64_t expected = h.geometry.voxel_count() * dtype_size(h.dtype);
  if (h.payload_bytes != expected) {
    header_error(0, "payload_bytes " + std::to_string(h.payload_bytes) + " does not match dims x dtype = " +
                        std::to_string(expected));
  }
  return h;
}

VolumeHeader read_volume_header(const fs::path& header_path) {
  return parse_volume_header(read_text_file(header_path));
}

Volume load_volume(const fs::path& header_path) {
  const VolumeHeader h = read_volume_header(header_path);
  const std::vector<std::uint8_t> bytes = read_payload(header_path, h);
  std::vector<float> values(h.geometry.voxel_count());
  if (h.dtype == DType::uint8) {
    std::copy(bytes.begin(), bytes.end(), values.begin());
  } else {
    std::memcpy(values.data(), bytes.data(), bytes.size());
  }
  return Volume{Grid<float>(h.geometry, std::move(values)), h.kind};
}

Mask load_mask(const fs::path& header_path) {
  const VolumeHeader h = read_volume_header(header_path);
  if (h.dtype != DType::uint8) {
    throw Error(ErrorKind::invalid_input, "'" + header_path.string() + "' is not a uint8 mask");
  }
  std::vector<std::uint8_t> bytes = read_payload(header_path, h);
  for (std::uint8_t& b : bytes) b = b != 0 ? 1 : 0;
  return Mask(h.geometry, std::move(bytes));
}

void save_volume(const fs::path& header_path, const Volume& volume) {
  VolumeHeader h;
  h.geometry = volume.grid.geometry();
  h.dtype = DType::float32;
  h.kind = volume.kind;
  std::vector<std::uint8_t> payload(volume.grid.size() * sizeof(float));
  std::memcpy(payload.data(), volume.grid.data().data(), payload.size());
  write_volume(header_path, std::move(h), std::move(payload));
}

void save_mask(const fs::path& header_path, const Mask& mask) {
  VolumeHeader h;
  h.geometry = mask.geometry();
  h.dtype = DType::uint8;
  h.kind = VolumeKind::intensity;
  write_volume(header_path, std::move(h), std::vector<std::uint8_t>(mask.data().begin(), mask.data().end()));
}

// ------------------------------------------------------------ annotations

namespace {

std::string json_string(const std::string& s) { return ojson(s).dump(); }

std::string json_number(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::invalid_annotation, "cannot store a non-finite coordinate");
  return format_double(v);
}

// Hand-laid-out JSON so each point stays on one line; numbers use the
// shortest round-trip representation.
std::string document_json(const AnnotationDocument& doc, const std::string& indent) {
  const std::string i1 = indent + "  ", i2 = i1 + "  ", i3 = i2 + "  ", i4 = i3 + "  ";
  std::string out = indent + "{\n";
  out += i1 + "\"format\": " + json_string(std::string(kAnnotationFormat)) + ",\n";
  out += i1 + "\"scan_id\": " + json_string(doc.scan_id) + ",\n";
  out += i1 + "\"rater_id\": " + json_string(doc.rater_id) + ",\n";
  out += i1 + "\"device\": " + json_string(doc.device) + ",\n";
  out += i1 + "\"conditions\": [";
  for (std::size_t k = 0; k < doc.conditions.size(); ++k) out += (k ? ", " : "") + json_string(doc.conditions[k]);
  out += "],\n";
  out += i1 + "\"canals\": [";
  for (std::size_t c = 0; c < doc.canals.size(); ++c) {
    const CanalAnnotation& canal = doc.canals[c];
    out += (c ? ",\n" : "\n") + i2 + "{\n";
    out += i3 + "\"side\": " + json_string(std::string(to_string(canal.side))) + ",\n";
    out += i3 + "\"clarity\": " + json_string(std::string(to_string(canal.clarity))) + ",\n";
    out += i3 + "\"interpolation\": " +
           json_string(canal.kind == PointKind::control_points ? "spline" : "polyline") + ",\n";
    out += i3 + "\"orientation\": " + json_string(std::string(to_string(canal.orientation))) + ",\n";
    out += i3 + "\"control_points_mm\": [";
    for (std::size_t k = 0; k < canal.points_mm.size(); ++k) {
      const Point3 p = canal.points_mm[k];
      out += (k ? ",\n" : "\n") + i4 + "[" + json_number(p.x) + ", " + json_number(p.y) + ", " + json_number(p.z) +
             "]";
    }
    out += canal.points_mm.empty() ? "]\n" : "\n" + i3 + "]\n";
    out += i2 + "}";
  }
  out += doc.canals.empty() ? "]\n" : "\n" + i1 + "]\n";
  out += indent + "}";
  return out;
}

struct DocContext {
  const std::string& origin;
  std::size_t index;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::invalid_annotation,
                origin + " [document " + std::to_string(index) + "]: " + what);
  }
};

std::string required_string(const ojson& j, const char* key, const DocContext& ctx) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) ctx.fail(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::string optional_string(const ojson& j, const char* key, std::string fallback, const DocContext& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) ctx.fail(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

AnnotationDocument from_json(const ojson& j, const DocContext& ctx, std::vector<std::string>& warnings) {
  if (!j.is_object()) ctx.fail("document must be an object");
  if (const auto f = j.find("format"); f != j.end() && (!f->is_string() || f->get<std::string>() != kAnnotationFormat)) {
    ctx.fail("unsupported format tag");
  }
  AnnotationDocument doc;
  doc.scan_id = required_string(j, "scan_id", ctx);
  doc.rater_id = required_string(j, "rater_id", ctx);
  if (doc.scan_id.empty() || doc.rater_id.empty()) ctx.fail("scan_id and rater_id must be nonempty");
  doc.device = optional_string(j, "device", "unknown", ctx);
  if (const auto c = j.find("conditions"); c != j.end()) {
    if (!c->is_array()) ctx.fail("'conditions' must be an array");
    for (const ojson& flag : *c) {
      if (!flag.is_string()) ctx.fail("condition flags must be strings");
      const std::string name = flag.get<std::string>();
      if (!is_known_condition(name)) {
        warnings.push_back(ctx.origin + ": unknown condition flag '" + name + "' on scan " + doc.scan_id);
      }
      doc.conditions.push_back(name);
    }
  }
  const auto canals = j.find("canals");
  if (canals == j.end() || !canals->is_array()) ctx.fail("missing array field 'canals'");
  for (const ojson& e : *canals) {
    if (!e.is_object()) ctx.fail("canal entries must be objects");
    CanalAnnotation canal;
    const std::string side = required_string(e, "side", ctx);
    const std::string clarity = optional_string(e, "clarity", "clear", ctx);
    try {
      canal.side = parse_side(side);
      canal.clarity = parse_clarity(clarity);
    } catch (const Error& err) {
      ctx.fail(err.what());
    }
    const std::string interp = optional_string(e, "interpolation", "spline", ctx);
    if (interp == "spline") {
      canal.kind = PointKind::control_points;
    } else if (interp == "polyline") {
      canal.kind = PointKind::polyline;
    } else {
      ctx.fail("unknown interpolation '" + interp + "'");
    }
    const std::string orient = optional_string(e, "orientation", "anterior_first", ctx);
    if (orient == "anterior_first") {
      canal.orientation = Orientation::anterior_first;
    } else if (orient == "posterior_first") {
      canal.orientation = Orientation::posterior_first;
    } else {
      ctx.fail("unknown orientation '" + orient + "'");
    }
    const auto pts = e.find("control_points_mm");
    if (pts == e.end() || !pts->is_array()) ctx.fail("canal without 'control_points_mm'");
    for (const ojson& p : *pts) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
        ctx.fail("control points must be [x, y, z] number triples");
      }
      const Point3 q{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
      if (!is_finite(q)) ctx.fail("non-finite coordinate");
      canal.points_mm.push_back(q);
    }
    if (canal.points_mm.size() < 2) ctx.fail("canal with fewer than 2 points");
    for (const CanalAnnotation& other : doc.canals) {
      if (other.side == canal.side) ctx.fail("two canals on side " + std::string(to_string(canal.side)));
    }
    doc.canals.push_back(std::move(canal));
  }
  return doc;
}

}  // namespace

std::string format_annotation(const AnnotationDocument& document) { return document_json(document, "") + "\n"; }

std::string format_annotations(std::span<const AnnotationDocument> documents) {
  if (documents.size() == 1) return format_annotation(documents.front());
  std::string out = "[";
  for (std::size_t i = 0; i < documents.size(); ++i) out += (i ? ",\n" : "\n") + document_json(documents[i], "  ");
  out += documents.empty() ? "]\n" : "\n]\n";
  return out;
}

LoadedAnnotations parse_annotations(std::string_view text, const std::string& origin) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw Error(ErrorKind::parse_error, origin + ": JSON syntax error at byte " + std::to_string(e.byte));
  }
  LoadedAnnotations out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.documents.push_back(from_json(j[i], {origin, i}, out.warnings));
  } else {
    out.documents.push_back(from_json(j, {origin, 0}, out.warnings));
  }
  return out;
}

LoadedAnnotations load_annotations(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorKind::io_error, "'" + path.string() + "' does not exist");
  if (!fs::is_directory(path, ec)) return parse_annotations(read_text_file(path), path.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  LoadedAnnotations out;
  for (const fs::path& f : files) {
    LoadedAnnotations part = parse_annotations(read_text_file(f), f.string());
    std::move(part.documents.begin(), part.documents.end(), std::back_inserter(out.documents));
    std::move(part.warnings.begin(), part.warnings.end(), std::back_inserter(out.warnings));
  }
  if (out.documents.empty()) {
    throw Error(ErrorKind::invalid_input, "no annotation files in '" + path.string() + "'");
  }
  return out;
}

void save_annotations(const fs::path& path, std::span<const AnnotationDocument> documents) {
  write_file_atomic(path, format_annotations(documents));
}

}  // namespace canaleval
