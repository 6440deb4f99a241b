#include "dialectid/resources.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dialectid/error.hpp"

namespace dialectid {

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("DIALECTID_DATA_DIR"); env && *env) return env;
  return DIALECTID_DEFAULT_DATA_DIR;
}

Resources Resources::load(const std::filesystem::path& data_dir) {
  if (!std::filesystem::is_directory(data_dir)) {
    throw ConfigError("data directory not found: " + data_dir.string());
  }
  align::AlignOptions options;
  const auto align_path = data_dir / "alignment.json";
  std::ifstream in(align_path);
  if (!in) throw ConfigError("cannot open " + align_path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    options.gap_penalty = j.at("gap_penalty").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(align_path.string() + ": " + e.what());
  }
  if (!(options.gap_penalty > 0.0)) throw ConfigError(align_path.string() + ": gap_penalty must be > 0");

  return Resources{data_dir, ipa::IpaChart::load(data_dir / "ipa_chart.tsv"),
                   align::GermanG2P::load(data_dir / "german_g2p.tsv"),
                   ipa::DistanceWeights::load(data_dir / "phone_distance.json"), options};
}

ipa::PhoneSequence Resources::tokenize(std::string_view ipa_text) const {
  return ipa::tokenize(ipa_text, chart);
}

align::Alignment Resources::align_texts(std::string_view ipa_text,
                                        std::string_view standard_german) const {
  return align::align(tokenize(ipa_text), align::reference_words(standard_german, g2p, chart), weights,
                      align_options);
}

}  // namespace dialectid
