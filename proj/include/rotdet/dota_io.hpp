// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

// Readers for DOTA-style annotation and detection text files.
//
//   ground truth, one file per image (<image_id>.txt):
//     x1 y1 x2 y2 x3 y3 x4 y4 category difficult
//   detections, one file per class (Task1_<class>.txt for OBB,
//   Task2_<class>.txt for HBB):
//     image_id score x1 y1 x2 y2 x3 y3 x4 y4
//
// Blank lines are skipped, as are the "imagesource:" / "gsd:" header lines of
// the original DOTA label files.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rotdet/error.hpp"
#include "rotdet/evaluation.hpp"
#include "rotdet/geometry.hpp"

namespace rotdet::io {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

/// Parses a finite real; returns false on any trailing garbage.
inline bool parse_real(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size() && std::isfinite(out);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Calls fn(line_number, tokens) for every non-blank line.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    const auto toks = split_ws(line);
    if (!toks.empty()) fn(line_no, toks);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

inline Quadrilateral parse_quad(std::span<const std::string_view> toks, const std::string& file, std::size_t line) {
  Quadrilateral q;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!parse_real(toks[2 * k], q.vertices[k].x) || !parse_real(toks[2 * k + 1], q.vertices[k].y)) {
      throw ParseError(file, line, "expected a number in vertex " + std::to_string(k + 1));
    }
  }
  return q;
}

inline std::vector<GroundTruthObject> parse_ground_truth(std::string_view text, const std::string& file) {
  std::vector<GroundTruthObject> out;
  for_each_line(text, [&](std::size_t line, const std::vector<std::string_view>& toks) {
    if (toks.size() == 1 && (toks[0].starts_with("imagesource:") || toks[0].starts_with("gsd:"))) return;
    if (toks.size() != 10) {
      throw ParseError(file, line, "expected 'x1 y1 x2 y2 x3 y3 x4 y4 category difficult', got " +
                                       std::to_string(toks.size()) + " fields");
    }
    GroundTruthObject obj;
    obj.quad = parse_quad(toks, file, line);
    obj.category = std::string(toks[8]);
    if (toks[9] == "0") {
      obj.difficult = false;
    } else if (toks[9] == "1") {
      obj.difficult = true;
    } else {
      throw ParseError(file, line, "difficult flag must be 0 or 1");
    }
    out.push_back(std::move(obj));
  });
  return out;
}

inline std::vector<ScoredQuad> parse_detections(std::string_view text, const std::string& file) {
  std::vector<ScoredQuad> out;
  for_each_line(text, [&](std::size_t line, const std::vector<std::string_view>& toks) {
    if (toks.size() != 10) {
      throw ParseError(file, line, "expected 'image_id score x1 y1 x2 y2 x3 y3 x4 y4', got " +
                                       std::to_string(toks.size()) + " fields");
    }
    ScoredQuad d;
    d.image_id = std::string(toks[0]);
    if (!parse_real(toks[1], d.score)) throw ParseError(file, line, "bad score");
    d.quad = parse_quad(std::span<const std::string_view>(toks).subspan(2), file, line);
    out.push_back(std::move(d));
  });
  return out;
}

/// Reads every *.txt in `dir` as one image's annotations (image id = stem).
inline GroundTruthSet load_ground_truth(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("ground-truth directory not found: " + dir.string());
  GroundTruthSet gt;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    gt[entry.path().stem().string()] = parse_ground_truth(read_file(entry.path()), entry.path().string());
  }
  return gt;
}

inline std::string detection_file_name(const std::string& cls, Task task) {
  return (task == Task::kObb ? "Task1_" : "Task2_") + cls + ".txt";
}

/// Reads Task1_<class>.txt / Task2_<class>.txt for every declared class.
/// A missing file is an error naming the file.
inline DetectionSet load_detections(const std::filesystem::path& dir, const std::vector<std::string>& classes,
                                    Task task) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("detection directory not found: " + dir.string());
  DetectionSet dets;
  for (const auto& cls : classes) {
    const fs::path file = dir / detection_file_name(cls, task);
    if (!fs::is_regular_file(file)) throw IoError("missing detection file " + file.string());
    dets[cls] = parse_detections(read_file(file), file.string());
  }
  return dets;
}

/// Sorted, de-duplicated categories appearing in the ground truth.
inline std::vector<std::string> categories_of(const GroundTruthSet& gt) {
  std::vector<std::string> out;
  for (const auto& [image, objs] : gt) {
    for (const auto& o : objs) out.push_back(o.category);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace rotdet::io
