// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

// rotdet: command-line front end for the rotated-box toolkit.
//
// Exit status: 0 success, 1 internal error or failed self-check, 2 invalid
// input (bad flags, unparseable files, missing files).

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rotdet/dota_io.hpp"
#include "rotdet/report.hpp"
#include "rotdet/rotdet.hpp"

namespace {

namespace fs = std::filesystem;
using namespace rotdet;

struct AngleUnit {
  bool radians = false;
  double to_rad(double a) const { return radians ? a : a * kPi / 180.0; }
  double from_rad(double a) const { return radians ? a : a * 180.0 / kPi; }
};

std::string fixed(double v) { return format_fixed(v, 6); }

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return io::read_file(path);
}

// Calls fn(line, numbers, extra_tokens) for every non-blank line, requiring
// exactly `count` leading numbers and `extra` trailing tokens.
template <class Fn>
void for_each_record(const std::string& path, std::size_t count, std::size_t extra, Fn&& fn) {
  const std::string name = path == "-" ? "<stdin>" : path;
  const std::string text = read_input(path);
  io::for_each_line(text, [&](std::size_t line, const std::vector<std::string_view>& toks) {
    if (!toks.empty() && toks[0].starts_with("#")) return;
    if (toks.size() != count + extra) {
      throw ParseError(name, line,
                       "expected " + std::to_string(count + extra) + " fields, got " + std::to_string(toks.size()));
    }
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) {
      if (!io::parse_real(toks[k], v[k])) throw ParseError(name, line, "field " + std::to_string(k + 1) + " is not a number");
    }
    std::vector<std::string> rest(toks.begin() + static_cast<std::ptrdiff_t>(count), toks.end());
    try {
      fn(line, v, rest);
    } catch (const ParseError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ParseError(name, line, e.what());
    }
  });
}

RotatedBox box_at(const std::vector<double>& v, std::size_t off, const AngleUnit& unit) {
  return RotatedBox{v[off], v[off + 1], v[off + 2], v[off + 3], unit.to_rad(v[off + 4])};
}

std::string box_text(const RotatedBox& b, const AngleUnit& unit) {
  return fixed(b.cx) + " " + fixed(b.cy) + " " + fixed(b.w) + " " + fixed(b.h) + " " + fixed(unit.from_rad(b.theta));
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v = 0.0;
    if (!io::parse_real(tok, v)) throw InvalidArgument("not a number in list: '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

struct IouArgs {
  std::string input = "-";
};

int run_iou(const IouArgs& a, const AngleUnit& unit) {
  std::string out;
  for_each_record(a.input, 10, 0, [&](std::size_t, const std::vector<double>& v, const auto&) {
    out += fixed(skew_iou(box_at(v, 0, unit), box_at(v, 5, unit))) + "\n";
  });
  std::cout << out;
  return 0;
}

struct EvalArgs {
  std::string gt_dir;
  std::string det_dir;
  std::string classes;
  std::string out_dir;
  std::string task = "obb";
  std::string metric = "voc07";
  double iou_thresh = 0.5;
  unsigned jobs = 1;
};

int run_eval(const EvalArgs& a) {
  EvalConfig cfg;
  cfg.task = a.task == "obb" ? Task::kObb : Task::kHbb;
  cfg.metric = a.metric == "voc07" ? ApMetric::kVoc07 : ApMetric::kContinuous;
  cfg.iou_thresh = a.iou_thresh;
  cfg.jobs = a.jobs;

  const GroundTruthSet gt = io::load_ground_truth(a.gt_dir);
  std::vector<std::string> classes;
  if (a.classes.empty()) {
    classes = io::categories_of(gt);
    if (classes.empty()) throw InvalidArgument("no categories in ground truth; pass --classes");
  } else {
    std::stringstream ss(a.classes);
    std::string c;
    while (std::getline(ss, c, ',')) {
      if (!c.empty()) classes.push_back(c);
    }
  }
  const DetectionSet dets = io::load_detections(a.det_dir, classes, cfg.task);
  const EvalReport report = evaluate(gt, dets, classes, cfg);

  const std::string json = to_json(report).dump(2) + "\n";
  const std::string table = to_text_table(report);
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    write_file(fs::path(a.out_dir) / "report.json", json);
    write_file(fs::path(a.out_dir) / "report.txt", table);
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << table.substr(0, table.find("warning: "));
  return 0;
}

struct AnchorsArgs {
  std::string strides = "4,6,8,10,12,14,16";
  std::vector<double> object{16.0, 16.0};
  std::vector<double> anchor;  // defaults to the object shape
  int samples = 32;
  std::string dump;
  std::vector<std::size_t> grid{1, 1};
  double dump_stride = 6.0;
};

int run_anchors(const AnchorsArgs& a) {
  const std::vector<double> strides = parse_list(a.strides);
  const std::vector<double>& anc = a.anchor.empty() ? a.object : a.anchor;
  std::string out = "stride,emo\n";
  for (double s : strides) {
    out += fixed(s) + "," + fixed(expected_max_iou(a.object[0], a.object[1], anc[0], anc[1], s, a.samples)) + "\n";
  }
  if (!a.dump.empty()) {
    AnchorSpec spec = AnchorSpec::dota_default();
    spec.stride = a.dump_stride;
    const AnchorSet set = generate_anchors(a.grid[0], a.grid[1], spec);
    std::string csv = "row,col,scale_index,ratio_index,xmin,ymin,xmax,ymax\n";
    for (const Anchor& x : set.anchors) {
      csv += std::to_string(x.row) + "," + std::to_string(x.col) + "," + std::to_string(x.scale_index) + "," +
             std::to_string(x.ratio_index) + "," + fixed(x.box.xmin) + "," + fixed(x.box.ymin) + "," +
             fixed(x.box.xmax) + "," + fixed(x.box.ymax) + "\n";
    }
    write_file(a.dump, csv);
  }
  std::cout << out;
  return 0;
}

struct TileArgs {
  int width = 0, height = 0, tile = 800, overlap = 200;
};

int run_tile(const TileArgs& a) {
  std::string out;
  for (const Window& w : tile_plan(a.width, a.height, a.tile, a.overlap)) {
    out += std::to_string(w.x0) + " " + std::to_string(w.y0) + " " + std::to_string(w.x1) + " " +
           std::to_string(w.y1) + "\n";
  }
  std::cout << out;
  return 0;
}

struct NmsArgs {
  std::string input = "-";
  double thresh = kDefaultNmsThreshold;
  std::vector<std::string> class_thresh;
  std::size_t pre_k = 0;
  std::size_t post_k = 0;
};

int run_nms(const NmsArgs& a) {
  std::vector<HorizontalDetection> dets;
  for_each_record(a.input, 5, 0, [&](std::size_t, const std::vector<double>& v, const auto&) {
    if (!(v[2] > v[0] && v[3] > v[1])) throw InvalidArgument("box needs xmax > xmin and ymax > ymin");
    dets.push_back({{v[0], v[1], v[2], v[3]}, v[4], "", ""});
  });
  const auto kept = a.pre_k || a.post_k
                        ? top_k_then_nms(dets, a.pre_k ? a.pre_k : dets.size() + 1,
                                         a.post_k ? a.post_k : dets.size() + 1, a.thresh)
                        : nms(dets, a.thresh);
  std::string out;
  for (const auto& d : kept) {
    out += fixed(d.box.xmin) + " " + fixed(d.box.ymin) + " " + fixed(d.box.xmax) + " " + fixed(d.box.ymax) + " " +
           fixed(d.score) + "\n";
  }
  std::cout << out;
  return 0;
}

NmsThresholds thresholds_from(const NmsArgs& a) {
  NmsThresholds t = NmsThresholds::uniform(a.thresh);
  for (const std::string& kv : a.class_thresh) {
    const auto eq = kv.find('=');
    double v = 0.0;
    if (eq == std::string::npos || eq == 0 || !io::parse_real(std::string_view(kv).substr(eq + 1), v)) {
      throw InvalidArgument("--class-thresh expects CATEGORY=VALUE, got '" + kv + "'");
    }
    t.per_category[kv.substr(0, eq)] = v;
  }
  return t;
}

int run_rnms(const NmsArgs& a, const AngleUnit& unit) {
  std::vector<Detection> dets;
  for_each_record(a.input, 6, 1, [&](std::size_t, const std::vector<double>& v, const std::vector<std::string>& rest) {
    const RotatedBox b = box_at(v, 0, unit);
    if (!(b.w > 0 && b.h > 0)) throw InvalidArgument("box needs w, h > 0");
    dets.push_back({b, v[5], rest[0], ""});
  });
  const auto kept = rnms(dets, thresholds_from(a));
  std::string out;
  for (const auto& d : kept) out += box_text(d.box, unit) + " " + fixed(d.score) + " " + d.category + "\n";
  std::cout << out;
  return 0;
}

struct MaskArgs {
  std::string input;
  std::size_t rows = 0, cols = 0;
  double downscale = 1.0;
  std::string out;
};

int run_mask(const MaskArgs& a, const AngleUnit& unit) {
  std::vector<RotatedBox> boxes;
  if (!a.input.empty()) {
    for_each_record(a.input, 5, 0, [&](std::size_t, const std::vector<double>& v, const auto&) {
      boxes.push_back(box_at(v, 0, unit));
    });
  }
  const MaskGrid m = rasterize_mask(boxes, a.rows, a.cols, a.downscale);
  const std::string pgm = to_pgm(m.values);
  if (a.out.empty() || a.out == "-") {
    std::cout << pgm;
  } else {
    write_file(a.out, pgm);
    std::cout << m.foreground_count() << " of " << m.values.size() << " cells foreground\n";
  }
  return 0;
}

struct LossCheckArgs {
  int points = 1000;
  unsigned long seed = 1;
  double eps = 1e-6;
  double tol = 1e-4;
};

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Regression loss: analytic gradient vs central differences with the IoU
// magnitude held at its value at the evaluation point.
double check_regression(const LossCheckArgs& a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> off(-3.0, 3.0), pos(-10.0, 10.0), side(2.0, 40.0), ang(-kHalfPi, 0.0);
  double worst = 0.0;
  for (int done = 0; done < a.points;) {
    std::array<double, 5> p{}, t{};
    bool near_kink = false;
    for (std::size_t j = 0; j < 5; ++j) {
      p[j] = off(rng);
      t[j] = off(rng);
      const double d = std::abs(p[j] - t[j]);
      near_kink = near_kink || d < 1e-3 || std::abs(d - 1.0) < 1e-3;
    }
    const RotatedBox pb{pos(rng), pos(rng), side(rng), side(rng), ang(rng)};
    const RotatedBox gb{pos(rng), pos(rng), side(rng), side(rng), ang(rng)};
    if (near_kink) continue;
    const RegressionLoss l = iou_smooth_l1_reg(RegressionTarget::from_array(p), RegressionTarget::from_array(t), pb, gb);
    const double mag = iou_magnitude(l.iou);
    const auto f = [&](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) s += smooth_l1(x[j] - t[j]) / smooth_l1(p[j] - t[j]) * mag;
      return s;
    };
    const auto num = numerical_gradient(f, std::span<const double>(p), a.eps);
    for (std::size_t j = 0; j < 5; ++j) worst = std::max(worst, relative_error(l.grads[j], num[j]));
    ++done;
  }
  return worst;
}

double check_attention(const LossCheckArgs& a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> logit(-4.0, 4.0);
  std::bernoulli_distribution coin(0.3);
  constexpr std::size_t kRows = 3, kCols = 4;
  double worst = 0.0;
  for (int done = 0; done < a.points; ++done) {
    SaliencyLogits s(kRows, kCols);
    BinaryMask m(kRows, kCols);
    std::vector<double> flat;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s.data()[i] = {logit(rng), logit(rng)};
      m.data()[i] = coin(rng);
      flat.insert(flat.end(), {s.data()[i][0], s.data()[i][1]});
    }
    const AttentionLoss l = attention_loss_with_grad(s, m);
    const auto f = [&](std::span<const double> x) {
      SaliencyLogits t(kRows, kCols);
      for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = {x[2 * i], x[2 * i + 1]};
      return attention_loss(t, m);
    };
    const auto num = numerical_gradient(f, std::span<const double>(flat), a.eps);
    for (std::size_t i = 0; i < s.size(); ++i) {
      worst = std::max(worst, relative_error(l.grads.data()[i][0], num[2 * i]));
      worst = std::max(worst, relative_error(l.grads.data()[i][1], num[2 * i + 1]));
    }
  }
  return worst;
}

int run_losscheck(const LossCheckArgs& a) {
  std::mt19937_64 rng(a.seed);
  const double reg = check_regression(a, rng);
  const double att = check_attention(a, rng);
  const double worst = std::max(reg, att);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "iou_smooth_l1_reg points=%d max_rel_err=%.3e\nattention_loss points=%d max_rel_err=%.3e\n",
                a.points, reg, a.points, att);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "max rel err %.3e %s %.0e\n", worst, worst <= a.tol ? "<=" : ">", a.tol);
  std::cout << buf;
  return worst <= a.tol ? 0 : 1;
}

struct CodingArgs {
  std::string input = "-";
};

// Encode lines are "gt(5) anchor(5)"; ttheta is printed in the CLI angle unit.
int run_encode(const CodingArgs& a, const AngleUnit& unit) {
  std::string out;
  for_each_record(a.input, 10, 0, [&](std::size_t, const std::vector<double>& v, const auto&) {
    const RegressionTarget t = encode(box_at(v, 0, unit), box_at(v, 5, unit));
    out += fixed(t.tx) + " " + fixed(t.ty) + " " + fixed(t.tw) + " " + fixed(t.th) + " " +
           fixed(unit.from_rad(t.ttheta)) + "\n";
  });
  std::cout << out;
  return 0;
}

// Decode lines are "tx ty tw th ttheta anchor(5)".
int run_decode(const CodingArgs& a, const AngleUnit& unit) {
  std::string out;
  for_each_record(a.input, 10, 0, [&](std::size_t, const std::vector<double>& v, const auto&) {
    const RegressionTarget t{v[0], v[1], v[2], v[3], unit.to_rad(v[4])};
    out += box_text(decode(t, box_at(v, 5, unit)), unit) + "\n";
  });
  std::cout << out;
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Rotated bounding-box geometry, losses, sampling and DOTA-style evaluation."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rotdet 0.1.0");

  AngleUnit unit;
  const auto add_angle_flags = [&unit](CLI::App* sub) {
    auto* deg = sub->add_flag_callback("--degrees", [&unit] { unit.radians = false; }, "Angles in degrees (default)");
    auto* rad = sub->add_flag("--radians", unit.radians, "Angles in radians");
    deg->excludes(rad);
  };

  IouArgs iou;
  auto* c_iou = app.add_subcommand("iou", "Skew IoU of each box pair: lines 'cx cy w h theta cx cy w h theta'");
  c_iou->add_option("input", iou.input, "Pairs file, '-' for stdin")->capture_default_str();
  add_angle_flags(c_iou);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "DOTA-style per-class AP and mAP");
  c_eval->add_option("--gt", ev.gt_dir, "Directory of per-image ground-truth files")->required();
  c_eval->add_option("--det", ev.det_dir, "Directory of Task1_/Task2_<class>.txt detection files")->required();
  c_eval->add_option("--classes", ev.classes, "Comma-separated class list (default: ground-truth categories)");
  c_eval->add_option("--out-dir", ev.out_dir, "Write report.json and report.txt here");
  c_eval->add_option("--task", ev.task)->check(CLI::IsMember({"obb", "hbb"}))->capture_default_str();
  c_eval->add_option("--metric", ev.metric)->check(CLI::IsMember({"voc07", "continuous"}))->capture_default_str();
  c_eval->add_option("--iou-thresh", ev.iou_thresh)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  c_eval->add_option("--jobs", ev.jobs)->check(CLI::Range(1u, 256u))->capture_default_str();

  AnchorsArgs an;
  auto* c_anchors = app.add_subcommand("anchors", "EMO vs anchor stride as CSV, optional anchor dump");
  c_anchors->add_option("--strides", an.strides, "Comma-separated strides")->capture_default_str();
  c_anchors->add_option("--object", an.object, "Object W H")->expected(2)->capture_default_str();
  c_anchors->add_option("--anchor", an.anchor, "Anchor W H (default: object shape)")->expected(2);
  c_anchors->add_option("--samples", an.samples, "Object placements per axis")->check(CLI::PositiveNumber)->capture_default_str();
  c_anchors->add_option("--dump", an.dump, "Write the DOTA anchor lattice as CSV");
  c_anchors->add_option("--grid", an.grid, "Lattice ROWS COLS for --dump")->expected(2)->capture_default_str();
  c_anchors->add_option("--dump-stride", an.dump_stride, "Lattice stride for --dump")->capture_default_str();

  TileArgs tl;
  auto* c_tile = app.add_subcommand("tile", "Crop windows covering an image");
  c_tile->add_option("width", tl.width)->required();
  c_tile->add_option("height", tl.height)->required();
  c_tile->add_option("tile", tl.tile)->capture_default_str();
  c_tile->add_option("overlap", tl.overlap)->capture_default_str();

  NmsArgs nm;
  auto* c_nms = app.add_subcommand("nms", "Greedy NMS: lines 'xmin ymin xmax ymax score'");
  c_nms->add_option("input", nm.input, "Detections file, '-' for stdin")->capture_default_str();
  c_nms->add_option("--thresh", nm.thresh)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  c_nms->add_option("--pre-k", nm.pre_k, "Keep this many top scores before NMS");
  c_nms->add_option("--post-k", nm.post_k, "Keep this many survivors");

  NmsArgs rn;
  auto* c_rnms = app.add_subcommand("rnms", "Per-category rotated NMS: lines 'cx cy w h theta score category'");
  c_rnms->add_option("input", rn.input, "Detections file, '-' for stdin")->capture_default_str();
  c_rnms->add_option("--thresh", rn.thresh, "Threshold for categories without their own")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_rnms->add_option("--class-thresh", rn.class_thresh, "CATEGORY=VALUE, repeatable")->allow_extra_args(false);
  add_angle_flags(c_rnms);

  MaskArgs mk;
  auto* c_mask = app.add_subcommand("mask", "Binary attention mask as PGM: box lines 'cx cy w h theta'");
  c_mask->add_option("input", mk.input, "Boxes file, '-' for stdin (omit for no boxes)");
  c_mask->add_option("--rows", mk.rows)->required()->check(CLI::PositiveNumber);
  c_mask->add_option("--cols", mk.cols)->required()->check(CLI::PositiveNumber);
  c_mask->add_option("--downscale", mk.downscale, "Image pixels per mask cell")->capture_default_str();
  c_mask->add_option("-o,--out", mk.out, "Output PGM path (default stdout)");
  add_angle_flags(c_mask);

  LossCheckArgs lc;
  auto* c_loss = app.add_subcommand("losscheck", "Finite-difference check of the loss gradients");
  c_loss->add_option("--points", lc.points)->check(CLI::PositiveNumber)->capture_default_str();
  c_loss->add_option("--seed", lc.seed)->capture_default_str();
  c_loss->add_option("--tol", lc.tol)->capture_default_str();

  CodingArgs enc, dec;
  auto* c_enc = app.add_subcommand("encode", "Regression targets: lines 'gt(cx cy w h theta) anchor(cx cy w h theta)'");
  c_enc->add_option("input", enc.input, "Input file, '-' for stdin")->capture_default_str();
  add_angle_flags(c_enc);
  auto* c_dec = app.add_subcommand("decode", "Boxes from targets: lines 'tx ty tw th ttheta anchor(cx cy w h theta)'");
  c_dec->add_option("input", dec.input, "Input file, '-' for stdin")->capture_default_str();
  add_angle_flags(c_dec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*c_iou) return run_iou(iou, unit);
  if (*c_eval) return run_eval(ev);
  if (*c_anchors) return run_anchors(an);
  if (*c_tile) return run_tile(tl);
  if (*c_nms) return run_nms(nm);
  if (*c_rnms) return run_rnms(rn, unit);
  if (*c_mask) return run_mask(mk, unit);
  if (*c_loss) return run_losscheck(lc);
  if (*c_enc) return run_encode(enc, unit);
  if (*c_dec) return run_decode(dec, unit);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  try {
    return run(argc, argv);
  } catch (const rotdet::Error& e) {
    // Input problems: bad values, unparseable or missing files.
    std::cout.flush();
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
