#include "dialectid/labels.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace dialectid {

namespace {

constexpr std::array<Label, 2> kBinary{Label::High, Label::Highest};
constexpr std::array<Label, 8> kEight{Label::AG, Label::BE, Label::BS, Label::GR,
                                      Label::LU, Label::SG, Label::VS, Label::ZH};

struct LabelInfo {
  Label label;
  std::string_view code;
  std::string_view display;
};

constexpr std::array<LabelInfo, 10> kInfo{{
    {Label::High, "High", "High Alemannic"},
    {Label::Highest, "Highest", "Highest Alemannic"},
    {Label::AG, "AG", "Aargau"},
    {Label::BE, "BE", "Bern"},
    {Label::BS, "BS", "Basel"},
    {Label::GR, "GR", "Grisons/Graubünden"},
    {Label::LU, "LU", "Lucerne/Luzern"},
    {Label::SG, "SG", "St. Gallen"},
    {Label::VS, "VS", "Valais/Wallis"},
    {Label::ZH, "ZH", "Zürich"},
}};

const LabelInfo& info(Label label) { return kInfo[static_cast<std::size_t>(label)]; }

}  // namespace

std::span<const Label> labels_for(Task task) {
  if (task == Task::Binary) return kBinary;
  return kEight;
}

bool in_label_space(Label label, Task task) {
  const auto space = labels_for(task);
  return std::find(space.begin(), space.end(), label) != space.end();
}

std::size_t label_index(Label label, Task task) {
  const auto space = labels_for(task);
  const auto it = std::find(space.begin(), space.end(), label);
  if (it == space.end()) {
    throw std::invalid_argument("label " + std::string(label_code(label)) + " is not in the " +
                                std::string(task_name(task)) + " label space");
  }
  return static_cast<std::size_t>(it - space.begin());
}

std::string_view label_code(Label label) { return info(label).code; }

std::string_view label_display_name(Label label) { return info(label).display; }

std::optional<Label> parse_label_code(std::string_view code) {
  for (const auto& entry : kInfo) {
    if (entry.code == code) return entry.label;
  }
  return std::nullopt;
}

std::string_view task_name(Task task) { return task == Task::Binary ? "binary" : "eight"; }

std::optional<Task> parse_task(std::string_view name) {
  if (name == "binary" || name == "2") return Task::Binary;
  if (name == "eight" || name == "8") return Task::Eight;
  return std::nullopt;
}

}  // namespace dialectid
