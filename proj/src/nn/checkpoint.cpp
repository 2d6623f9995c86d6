// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stimkit/error.hpp"

namespace stimkit::nn {
namespace {

using nlohmann::json;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(std::string_view in, std::size_t pos) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

std::size_t get_size(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !(it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0))) {
    fail(ErrorKind::kConfig, where + "." + key + " must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  json blocks = json::array();
  for (const ConvBlock& b : c.conv_blocks) {
    blocks.push_back({{"filters", b.filters}, {"kernel", b.kernel}, {"pool", b.pool}});
  }
  return json{{"length", c.length},           {"height", c.height},
              {"width", c.width},             {"channels", c.channels},
              {"conv_blocks", blocks},        {"frame_embedding", c.frame_embedding},
              {"lstm_hidden", c.lstm_hidden}, {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::kConfig, where + " must be an object");
  ModelConfig c;
  if (j.contains("length")) c.length = get_size(j, "length", where);
  if (j.contains("height")) c.height = get_size(j, "height", where);
  if (j.contains("width")) c.width = get_size(j, "width", where);
  if (j.contains("channels")) c.channels = get_size(j, "channels", where);
  if (j.contains("frame_embedding")) c.frame_embedding = get_size(j, "frame_embedding", where);
  if (j.contains("lstm_hidden")) c.lstm_hidden = get_size(j, "lstm_hidden", where);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("conv_blocks")) {
    const json& blocks = j.at("conv_blocks");
    if (!blocks.is_array()) fail(ErrorKind::kConfig, where + ".conv_blocks must be an array");
    c.conv_blocks.clear();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string w = where + ".conv_blocks[" + std::to_string(i) + "]";
      ConvBlock b;
      b.filters = get_size(blocks[i], "filters", w);
      if (blocks[i].contains("kernel")) b.kernel = get_size(blocks[i], "kernel", w);
      if (blocks[i].contains("pool")) b.pool = get_size(blocks[i], "pool", w);
      c.conv_blocks.push_back(b);
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
  return c;
}

ModelCheckpoint ModelCheckpoint::from_model(const Model<float>& model, TrainingMetadata training) {
  ModelCheckpoint ck;
  ck.config = model.config();
  ck.training = training;
  const auto params = model.parameters();
  for (const ParamSlot& s : model.layout()) {
    std::vector<float> values(params.begin() + static_cast<std::ptrdiff_t>(s.offset),
                              params.begin() + static_cast<std::ptrdiff_t>(s.offset + s.count));
    ck.parameters.emplace_back(s.name, Tensor<float>(s.shape, std::move(values)));
  }
  return ck;
}

Model<float> ModelCheckpoint::to_model() const {
  Model<float> model(config);
  const auto& layout = model.layout();
  if (layout.size() != parameters.size()) {
    fail(ErrorKind::kShape, "checkpoint has " + std::to_string(parameters.size()) +
                                " parameter tensors, config implies " + std::to_string(layout.size()));
  }
  auto dst = model.parameters();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, tensor] = parameters[i];
    if (name != layout[i].name || tensor.shape != layout[i].shape) {
      fail(ErrorKind::kShape, "checkpoint parameter " + name + " " + shape_string(tensor.shape) +
                                  " does not match expected " + layout[i].name + " " +
                                  shape_string(layout[i].shape));
    }
    std::copy(tensor.data.begin(), tensor.data.end(), dst.begin() + static_cast<std::ptrdiff_t>(layout[i].offset));
  }
  return model;
}

std::string serialize_checkpoint(const ModelCheckpoint& ck) {
  json table = json::array();
  std::size_t offset = 0;
  for (const auto& [name, tensor] : ck.parameters) {
    table.push_back({{"name", name}, {"shape", tensor.shape}, {"offset", offset}, {"count", tensor.size()}});
    offset += tensor.size() * 4;
  }
  const json header = {
      {"format_version", ck.format_version},
      {"config", model_config_to_json(ck.config)},
      {"parameters", table},
      {"training",
       {{"epochs_run", ck.training.epochs_run},
        {"final_loss", ck.training.final_loss},
        {"seed", ck.training.seed}}},
      {"preprocess", ck.preprocess},
  };
  const std::string header_text = header.dump();
  std::string out(kCheckpointMagic);
  put_u64(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& entry : ck.parameters) {
    for (float v : entry.second.data) put_f32(out, v);
  }
  return out;
}

ModelCheckpoint parse_checkpoint(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kCheckpointMagic) {
    fail(ErrorKind::kFormat, source + ": not a stimkit checkpoint (bad magic)");
  }
  const std::uint64_t header_len = get_u64(bytes, 8);
  if (header_len > bytes.size() - 16) fail(ErrorKind::kFormat, source + ": truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(16, header_len));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, source + ": malformed header at byte " + std::to_string(e.byte));
  }
  const std::size_t payload = 16 + header_len;
  ModelCheckpoint ck;
  try {
    ck.format_version = header.at("format_version").get<int>();
    if (ck.format_version != kCheckpointVersion) {
      fail(ErrorKind::kFormat, source + ": unsupported format_version " + std::to_string(ck.format_version));
    }
    ck.config = model_config_from_json(header.at("config"), "config");
    const json& t = header.at("training");
    ck.training.epochs_run = t.at("epochs_run").get<std::size_t>();
    ck.training.final_loss = t.at("final_loss").get<double>();
    ck.training.seed = t.at("seed").get<std::uint64_t>();
    ck.preprocess = header.value("preprocess", json());
    for (const json& p : header.at("parameters")) {
      Shape shape = p.at("shape").get<Shape>();
      const std::size_t count = p.at("count").get<std::size_t>();
      const std::size_t offset = p.at("offset").get<std::size_t>();
      if (count != element_count(shape) || payload + offset + count * 4 > bytes.size()) {
        fail(ErrorKind::kFormat, source + ": parameter table entry out of range");
      }
      std::vector<float> values(count);
      for (std::size_t i = 0; i < count; ++i) values[i] = get_f32(bytes, payload + offset + 4 * i);
      ck.parameters.emplace_back(p.at("name").get<std::string>(), Tensor<float>(std::move(shape), std::move(values)));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, source + ": bad checkpoint header: " + e.what());
  }
  return ck;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::kIo, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void save_checkpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(checkpoint));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str(), path.string());
}

}  // namespace stimkit::nn
