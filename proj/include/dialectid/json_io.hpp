#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialectid/prediction.hpp"
#include "dialectid/segment.hpp"

namespace dialectid {

using Json = nlohmann::ordered_json;

// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Optional fields are omitted when absent.
Json segment_to_json(const Segment& s);
// Throws DataError naming `where` on missing or mistyped fields.
Segment segment_from_json(const Json& j, std::string_view where);

Json prediction_to_json(const Prediction& p);
Prediction prediction_from_json(const Json& j, std::string_view where);

// One compact JSON record per line, '\n'-terminated.
std::string predictions_to_jsonl(const std::vector<Prediction>& predictions);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);

}  // namespace dialectid
