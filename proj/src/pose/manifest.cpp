// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/pose/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stimkit/error.hpp"
#include "stimkit/pose/openpose_io.hpp"

namespace stimkit::pose {
namespace {

using nlohmann::json;

const json& require(const json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    fail(ErrorKind::kSchema, where + ": missing field `" + field + "`");
  }
  return *it;
}

int require_int(const json& obj, const char* field, const std::string& where) {
  const json& v = require(obj, field, where);
  if (!v.is_number_integer()) {
    fail(ErrorKind::kSchema, where + ": field `" + field + "` must be an integer");
  }
  return v.get<int>();
}

std::string require_string(const json& obj, const char* field, const std::string& where) {
  const json& v = require(obj, field, where);
  if (!v.is_string()) {
    fail(ErrorKind::kSchema, where + ": field `" + field + "` must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

std::filesystem::path Manifest::resolve(const ClipRecord& clip) const {
  std::filesystem::path p(clip.keypoint_source);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, source + ": malformed JSON at byte " +
                                std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::kSchema, source + ": manifest must be an object");

  Manifest m;
  m.version = require_int(doc, "version", source);
  if (m.version != kManifestVersion) {
    fail(ErrorKind::kSchema, source + ": unsupported manifest version " +
                                 std::to_string(m.version));
  }
  m.frame_size.width = require_int(doc, "frame_width", source);
  m.frame_size.height = require_int(doc, "frame_height", source);
  if (m.frame_size.width <= 0 || m.frame_size.height <= 0) {
    fail(ErrorKind::kValidation, source + ": frame dimensions must be positive");
  }
  const json& clips = require(doc, "clips", source);
  if (!clips.is_array()) fail(ErrorKind::kSchema, source + ": `clips` must be an array");

  std::set<std::string> seen;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const json& c = clips[i];
    std::string where = source + ": clip #" + std::to_string(i);
    if (!c.is_object()) fail(ErrorKind::kSchema, where + " is not an object");
    ClipRecord r;
    r.clip_id = require_string(c, "id", where);
    where += " (" + r.clip_id + ")";
    r.subject_id = require_string(c, "subject", where);
    const std::string label = require_string(c, "label", where);
    auto parsed = parse_label(label);
    if (!parsed) {
      fail(ErrorKind::kSchema, where + ": unknown label `" + label + "`");
    }
    r.label = *parsed;
    const json& fps = require(c, "fps", where);
    if (!fps.is_number()) fail(ErrorKind::kSchema, where + ": field `fps` must be a number");
    r.fps = fps.get<double>();
    r.keypoint_source = require_string(c, "keypoints", where);
    r.start_frame = require_int(c, "start_frame", where);
    r.end_frame = require_int(c, "end_frame", where);
    if (!(r.fps > 0.0)) fail(ErrorKind::kValidation, where + ": fps must be positive");
    if (r.start_frame < 0) fail(ErrorKind::kValidation, where + ": start_frame must be >= 0");
    if (r.start_frame > r.end_frame) {
      fail(ErrorKind::kValidation, where + ": start_frame " + std::to_string(r.start_frame) +
                                       " exceeds end_frame " + std::to_string(r.end_frame));
    }
    if (!seen.insert(r.clip_id).second) {
      fail(ErrorKind::kConflict, source + ": duplicate clip id `" + r.clip_id + "`");
    }
    m.clips.push_back(std::move(r));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Manifest m = parse_manifest(ss.str(), path.string());
  m.base_dir = path.parent_path();
  return m;
}

std::string serialize_manifest(const Manifest& manifest) {
  nlohmann::ordered_json doc;
  doc["version"] = manifest.version;
  doc["frame_width"] = manifest.frame_size.width;
  doc["frame_height"] = manifest.frame_size.height;
  doc["clips"] = nlohmann::ordered_json::array();
  for (const ClipRecord& c : manifest.clips) {
    nlohmann::ordered_json r;
    r["id"] = c.clip_id;
    r["subject"] = c.subject_id;
    r["label"] = std::string(to_string(c.label));
    r["fps"] = c.fps;
    r["keypoints"] = c.keypoint_source;
    r["start_frame"] = c.start_frame;
    r["end_frame"] = c.end_frame;
    doc["clips"].push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

std::vector<PoseFrame> load_clip_frames(const Manifest& manifest,
                                        const ClipRecord& clip) {
  const std::vector<PoseFrame> all = read_keypoint_source(manifest.resolve(clip));
  const std::size_t n = static_cast<std::size_t>(clip.end_frame - clip.start_frame + 1);
  std::vector<PoseFrame> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].frame_index = clip.start_frame + static_cast<int>(i);
  for (const PoseFrame& f : all) {
    if (f.frame_index >= clip.start_frame && f.frame_index <= clip.end_frame) {
      out[static_cast<std::size_t>(f.frame_index - clip.start_frame)] = f;
    }
  }
  return out;
}

}  // namespace stimkit::pose
