// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "rotdet/evaluation.hpp"

namespace rotdet {

inline std::string format_fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

/// JSON form of an EvalReport. Key order is fixed so equal reports serialize
/// to identical bytes. The worker count is not echoed.
inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["config"] = {
      {"iou_thresh", r.config.iou_thresh},
      {"task", std::string(to_string(r.config.task))},
      {"metric", std::string(to_string(r.config.metric))},
      {"compatibility", "devkit-compatible"},
  };
  j["map"] = r.map;
  auto classes = nlohmann::ordered_json::array();
  for (const ClassReport& c : r.classes) {
    classes.push_back({
        {"name", c.name},
        {"ap", c.ap},
        {"n_gt", c.n_gt},
        {"n_det", c.n_det},
        {"tp", c.tp},
        {"fp", c.fp},
        {"ignored", c.ignored},
        {"no_ground_truth", c.no_ground_truth},
        {"precision", c.pr.precision},
        {"recall", c.pr.recall},
    });
  }
  j["classes"] = std::move(classes);
  j["warnings"] = r.warnings;
  return j;
}

/// Plain-text table: one column per class followed by mAP.
inline std::string to_text_table(const EvalReport& r) {
  std::size_t width = 10;
  for (const ClassReport& c : r.classes) width = std::max(width, c.name.size() + 2);
  const auto pad = [width](std::string s) {
    s.resize(std::max(s.size(), width), ' ');
    return s;
  };
  std::string out = "task=" + std::string(to_string(r.config.task)) + " metric=" +
                    std::string(to_string(r.config.metric)) + " iou_thresh=" + format_fixed(r.config.iou_thresh) +
                    "\n";
  std::string header, values;
  for (const ClassReport& c : r.classes) {
    header += pad(c.name);
    values += pad(format_fixed(c.ap));
  }
  header += "mAP\n";
  values += format_fixed(r.map) + "\n";
  out += header + values;
  for (const std::string& w : r.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace rotdet
