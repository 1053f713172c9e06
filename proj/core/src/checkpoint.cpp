// Copyright 2026 The MCDRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcdrl/errors.hpp"
#include "mcdrl/tensor_io.hpp"
#include "mcdrl/trainer.hpp"

namespace mcdrl {
namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'M', 'C', 'K', 'P'};
constexpr std::size_t kMaxNameBytes = 1024;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated in ") + what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t uint(std::size_t width, const char* what) {
    auto b = take(width, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= std::uint64_t{static_cast<unsigned char>(b[i])} << (8 * i);
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json meta_json(const Checkpoint& c) {
  json history = json::array();
  for (const auto& h : c.history) history.push_back(json::parse(epoch_log_json(h)));
  return json{{"config", json::parse(c.config.to_json())},
              {"classes", c.num_classes},
              {"epochs_done", c.epochs_done},
              {"rng", c.rng_state},
              {"history", history}};
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kCheckpointVersion));
  out.append(3, '\0');
  put_u64(out, checkpoint.config.hash());
  const std::string meta = meta_json(checkpoint).dump();
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  put_u32(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& t : checkpoint.tensors) {
    if (t.name.empty() || t.name.size() > kMaxNameBytes) throw ParameterError("bad checkpoint tensor name");
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    out += encode_tensor(t.tensor, StoredPrecision::kFloat64);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("not a checkpoint (bad magic)");
  const auto version = r.uint(1, "version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  r.take(3, "header padding");
  const std::uint64_t hash = r.uint(8, "config hash");
  const std::size_t meta_len = r.uint(4, "metadata length");
  const json meta = json::parse(r.take(meta_len, "metadata"), nullptr, false);
  if (meta.is_discarded() || !meta.is_object()) throw FormatError("checkpoint metadata is not valid JSON");

  Checkpoint c;
  try {
    c.config = TrainConfig::from_json(meta.at("config").dump());
    c.num_classes = meta.at("classes").get<std::size_t>();
    c.epochs_done = meta.at("epochs_done").get<std::size_t>();
    c.rng_state = meta.at("rng").get<std::string>();
    for (const auto& h : meta.at("history")) {
      c.history.push_back(parse_epoch_log(h.dump()));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  if (c.config.hash() != hash) throw FormatError("checkpoint config hash mismatch");

  const std::size_t count = r.uint(4, "tensor count");
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t name_len = r.uint(4, "tensor name length");
    if (name_len == 0 || name_len > kMaxNameBytes) throw FormatError("bad checkpoint tensor name length");
    std::string name(r.take(name_len, "tensor name"));
    const std::string_view head = r.take(kTensorHeaderBytes, "tensor header");
    std::size_t rank = static_cast<unsigned char>(head[6]);
    if (rank > kMaxTensorRank) throw TensorFormatError(FormatFault::kBadRank, name);
    std::uint64_t elements = 0;
    for (int b = 0; b < 8; ++b) elements |= std::uint64_t{static_cast<unsigned char>(head[8 + b])} << (8 * b);
    if (elements > kMaxTensorElements) throw TensorFormatError(FormatFault::kDimOverflow, name);
    const std::size_t width = static_cast<unsigned char>(head[5]) == 1 ? 4 : 8;
    const std::size_t rest = 4 * rank + width * elements;
    std::string blob(head);
    blob += r.take(rest, "tensor payload");
    c.tensors.push_back({std::move(name), decode_tensor(blob)});
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("checkpoint not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace mcdrl
