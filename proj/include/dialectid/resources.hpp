#pragma once

#include <filesystem>
#include <string_view>

#include "dialectid/alignment.hpp"
#include "dialectid/g2p.hpp"
#include "dialectid/ipa.hpp"

namespace dialectid {

// DIALECTID_DATA_DIR from the environment, else the source tree's data/.
std::filesystem::path default_data_dir();

// The read-only linguistic tables every pipeline stage shares.
struct Resources {
  std::filesystem::path data_dir;
  ipa::IpaChart chart;
  align::GermanG2P g2p;
  ipa::DistanceWeights weights;
  align::AlignOptions align_options;

  // Reads ipa_chart.tsv, german_g2p.tsv, phone_distance.json and alignment.json.
  static Resources load(const std::filesystem::path& data_dir);

  ipa::PhoneSequence tokenize(std::string_view ipa_text) const;
  align::Alignment align_texts(std::string_view ipa_text, std::string_view standard_german) const;
};

}  // namespace dialectid
