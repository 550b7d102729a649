#pragma once

// Table rendering shared by the pipeline summary and the report command.

#include <string>
#include <utility>
#include <vector>

#include "xlgen/eval/report.hpp"

namespace xlgen::detail {

struct Tables {
  std::string text;
  std::string tsv;
};

// One row per system; one column per (task.lang, metric) present in any
// report, in first-seen order.
Tables render_tables(const std::vector<std::pair<std::string, std::vector<eval::EvalReport>>>& rows);

// "WE_DEC+fs100" -> ("WE_DEC", 100); plain names give n = 0.
std::pair<std::string, std::size_t> split_system_name(const std::string& name);

}  // namespace xlgen::detail
