/*
 * Copyright 2026 The MMA Toolkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mma/checkpoint.hpp"

#include "mma/binary_io.hpp"
#include "mma/error.hpp"

namespace mma {

namespace {
constexpr std::string_view kCheckpointMagic = "MMACKPT1";
}

std::vector<std::uint8_t> Checkpoint::to_bytes() const {
  ByteWriter w;
  w.magic(kCheckpointMagic);
  w.u64(step_count);
  w.f64_array(params);
  w.f64_array(ema_params);
  w.f64_array(first_moment);
  w.f64_array(second_moment);
  w.u64(rng_states.size());
  for (const auto& [name, state] : rng_states) {
    w.string(name);
    w.string(state);
  }
  w.u64_array(labeled_ids);
  w.string(progress);
  return w.bytes();
}

Checkpoint Checkpoint::from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic(kCheckpointMagic);
  Checkpoint c;
  c.step_count = r.u64();
  c.params = r.f64_array();
  c.ema_params = r.f64_array();
  c.first_moment = r.f64_array();
  c.second_moment = r.f64_array();
  if (c.ema_params.size() != c.params.size() || c.first_moment.size() != c.params.size() ||
      c.second_moment.size() != c.params.size()) {
    throw FormatError("checkpoint parameter arrays differ in length");
  }
  const auto streams = r.u64();
  if (streams > r.remaining()) throw FormatError("corrupt random stream table");
  for (std::uint64_t i = 0; i < streams; ++i) {
    auto name = r.string();
    auto state = r.string();
    c.rng_states.emplace_back(std::move(name), std::move(state));
  }
  c.labeled_ids = r.u64_array();
  c.progress = r.string();
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const { write_file_bytes(path, to_bytes()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  try {
    return from_bytes(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

const std::string& Checkpoint::rng_state(const std::string& name) const {
  for (const auto& [n, state] : rng_states) {
    if (n == name) return state;
  }
  throw FormatError("checkpoint has no random stream '" + name + "'");
}

}  // namespace mma
