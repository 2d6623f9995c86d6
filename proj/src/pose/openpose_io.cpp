// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/pose/openpose_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stimkit/error.hpp"

namespace stimkit::pose {
namespace {

using nlohmann::json;

double as_float32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::array<Keypoint, kBody25Size> parse_person(const json& person,
                                               std::string_view source) {
  std::array<Keypoint, kBody25Size> out{};
  auto it = person.find("pose_keypoints_2d");
  if (it == person.end() || !it->is_array()) {
    fail(ErrorKind::kFormat,
         std::string(source) + ": person without pose_keypoints_2d array");
  }
  const json& flat = *it;
  if (flat.size() % 3 != 0) {
    fail(ErrorKind::kFormat, std::string(source) +
                                 ": pose_keypoints_2d length " +
                                 std::to_string(flat.size()) +
                                 " is not divisible by 3");
  }
  const std::size_t count = std::min(flat.size() / 3, kBody25Size);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (!flat[3 * i + j].is_number()) {
        fail(ErrorKind::kFormat, std::string(source) +
                                     ": non-numeric keypoint value at index " +
                                     std::to_string(3 * i + j));
      }
    }
    out[i] = Keypoint{as_float32(flat[3 * i].get<double>()),
                      as_float32(flat[3 * i + 1].get<double>()),
                      as_float32(flat[3 * i + 2].get<double>())};
  }
  return out;
}

double head_confidence(const std::array<Keypoint, kBody25Size>& kps) {
  double sum = 0.0;
  for (std::size_t idx : kHeadBody25Index) sum += kps[idx].confidence;
  return sum;
}

PoseFrame frame_from_json(const json& doc, std::string_view source,
                          int frame_index) {
  if (!doc.is_object()) {
    fail(ErrorKind::kFormat, std::string(source) + ": frame is not a JSON object");
  }
  auto it = doc.find("people");
  if (it == doc.end() || !it->is_array()) {
    fail(ErrorKind::kFormat, std::string(source) + ": missing `people` array");
  }
  PoseFrame frame;
  frame.frame_index = frame_index;
  double best = -1.0;
  for (const json& person : *it) {
    auto kps = parse_person(person, source);
    const double score = head_confidence(kps);
    if (score > best) {
      best = score;
      frame.keypoints = kps;
    }
  }
  return frame;
}

json parse_or_fail(std::string_view raw, std::string_view source) {
  try {
    return json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string(source) + ": malformed JSON at byte " +
                                std::to_string(e.byte) + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append_float(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v));
  out.append(buf, res.ptr);
}

void append_keypoints(std::string& out, const PoseFrame& frame) {
  out += "[";
  for (std::size_t i = 0; i < kBody25Size; ++i) {
    const Keypoint& k = frame.keypoints[i];
    if (i) out += ",";
    append_float(out, k.x);
    out += ",";
    append_float(out, k.y);
    out += ",";
    append_float(out, k.confidence);
  }
  out += "]";
}

}  // namespace

PoseFrame import_openpose_frame(std::string_view raw_json,
                                std::string_view source_name, int frame_index) {
  return frame_from_json(parse_or_fail(raw_json, source_name), source_name,
                         frame_index);
}

std::vector<PoseFrame> read_keypoint_source(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<PoseFrame> frames;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      frames.push_back(import_openpose_frame(read_file(files[i]),
                                             files[i].string(),
                                             static_cast<int>(i)));
    }
    return frames;
  }
  if (!fs::exists(path)) fail(ErrorKind::kIo, "no such keypoint source: " + path.string());
  const std::string source = path.string();
  const json doc = parse_or_fail(read_file(path), source);
  if (!doc.is_array()) {
    fail(ErrorKind::kFormat, source + ": consolidated keypoint file must be a JSON array");
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    int index = static_cast<int>(i);
    if (auto it = doc[i].find("frame_index"); doc[i].is_object() && it != doc[i].end()) {
      if (!it->is_number_integer() || it->get<int>() < 0) {
        fail(ErrorKind::kFormat, source + ": bad frame_index at element " + std::to_string(i));
      }
      index = it->get<int>();
    }
    frames.push_back(frame_from_json(doc[i], source, index));
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const PoseFrame& a, const PoseFrame& b) {
                     return a.frame_index < b.frame_index;
                   });
  return frames;
}

std::string write_consolidated(std::span<const PoseFrame> frames) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out += "{\"frame_index\":" + std::to_string(frames[i].frame_index) +
           ",\"people\":[{\"pose_keypoints_2d\":";
    append_keypoints(out, frames[i]);
    out += "}]}";
    out += (i + 1 < frames.size()) ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

std::string write_openpose_frame(const PoseFrame& frame) {
  std::string out = "{\"version\":1.3,\"people\":[{\"pose_keypoints_2d\":";
  append_keypoints(out, frame);
  out += "}]}\n";
  return out;
}

}  // namespace stimkit::pose
