#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "canaleval/annotation.hpp"
#include "canaleval/volume.hpp"

namespace canaleval {

enum class DType { uint8, float32 };

std::string_view to_string(DType dtype) noexcept;
std::size_t dtype_size(DType dtype) noexcept;

/// Text header of a volume file. The raw payload lives next to the header,
/// little-endian, x fastest.
///
///   canaleval-volume 1
///   dims 50 50 50
///   spacing_mm 0.4 0.4 0.4
///   origin_mm 0 0 0
///   dtype float32
///   kind probability
///   byte_order little
///   payload scan.raw
///   payload_bytes 500000
struct VolumeHeader {
  GridGeometry geometry;
  DType dtype = DType::float32;
  VolumeKind kind = VolumeKind::intensity;
  std::string payload;
  std::uint64_t payload_bytes = 0;
};

std::string format_volume_header(const VolumeHeader& header);
/// Throws parse_error naming the byte offset of the offending line.
VolumeHeader parse_volume_header(std::string_view text);

VolumeHeader read_volume_header(const std::filesystem::path& header_path);

/// Loads either dtype as floats; uint8 payloads keep their integer values.
Volume load_volume(const std::filesystem::path& header_path);
/// Loads a uint8 volume; nonzero voxels become 1.
Mask load_mask(const std::filesystem::path& header_path);

/// Writes `<stem>.raw` next to the header; both files are written atomically.
void save_volume(const std::filesystem::path& header_path, const Volume& volume);
void save_mask(const std::filesystem::path& header_path, const Mask& mask);

inline constexpr std::string_view kAnnotationFormat = "canal-annotation/1";

std::string format_annotations(std::span<const AnnotationDocument> documents);
std::string format_annotation(const AnnotationDocument& document);

struct LoadedAnnotations {
  std::vector<AnnotationDocument> documents;
  /// Unknown condition flags and similar non-fatal findings.
  std::vector<std::string> warnings;
};

/// Parses one file body: a single document object or an array of them.
/// `origin` names the source in messages.
LoadedAnnotations parse_annotations(std::string_view text, const std::string& origin = "<memory>");

/// Loads a file, or every `*.json` file of a directory in name order.
LoadedAnnotations load_annotations(const std::filesystem::path& path);

void save_annotations(const std::filesystem::path& path, std::span<const AnnotationDocument> documents);

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
/// Fixed-point text with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);
/// The double obtained by parsing format_fixed(value, decimals).
double round_fixed(double value, int decimals);

}  // namespace canaleval
