#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace dialectid {

enum class Task { Binary, Eight };

// One enum spans both label spaces; labels_for() restricts to a task.
enum class Label { High, Highest, AG, BE, BS, GR, LU, SG, VS, ZH };

// Fixed label order: High before Highest; the eight codes alphabetically.
std::span<const Label> labels_for(Task task);
bool in_label_space(Label label, Task task);
std::size_t label_index(Label label, Task task);  // position in labels_for(task)

// Wire names: "High", "Highest", "AG" ... "ZH".
std::string_view label_code(Label label);
// Human names: "High Alemannic", "Aargau", ...
std::string_view label_display_name(Label label);
std::optional<Label> parse_label_code(std::string_view code);

std::string_view task_name(Task task);  // "binary" | "eight"
std::optional<Task> parse_task(std::string_view name);

}  // namespace dialectid
