// Copyright 2026 The lamda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lamda/random.hpp"

namespace lamda {

// Token 0 starts nothing and is never produced by a task; token 1 separates
// the prompt from the answer. Content tokens are 2..vocab-1.
inline constexpr int kPadToken = 0;
inline constexpr int kSepToken = 1;
inline constexpr int kFirstContentToken = 2;

enum class TaskId {
  copy,     // x_1..x_m SEP x_1..x_m
  reverse,  // x_1..x_m SEP x_m..x_1
  modsum,   // x_1..x_m SEP s_1..s_m with s_j the running sum of x mod K
  corpus,   // windows of a character-level text file
};

std::string to_string(TaskId task);
TaskId parse_task(const std::string& text);

struct TaskConfig {
  TaskId task = TaskId::copy;
  std::size_t vocab = 64;
  std::size_t prompt_len = 8;  // m; sequences hold 2m inputs
  std::size_t batch = 8;
  std::string corpus_text;  // contents, not a path; corpus task only

  // Tokens per input sequence.
  std::size_t seq_len() const { return 2 * prompt_len; }
  void validate() const;
};

// One batch of next-token examples. inputs[i] predicts targets[i]; targets are
// -1 where nothing is scored (the prompt half of the synthetic tasks).
struct Batch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<int> inputs;
  std::vector<int> targets;
};

// The full 2m+1 token sequence of a synthetic task for one prompt.
std::vector<int> task_sequence(TaskId task, const std::vector<int>& prompt, std::size_t vocab);

// Deterministic stream of batches for a task.
class TaskStream {
 public:
  TaskStream(TaskConfig config, std::uint64_t seed);
  Batch next();
  const TaskConfig& config() const { return config_; }

 private:
  TaskConfig config_;
  Rng rng_;
  std::vector<int> corpus_tokens_;
};

// Convenience: the stream a run trains on and its held-out evaluation set.
TaskStream make_task(const TaskConfig& config, std::uint64_t seed);
std::vector<Batch> make_eval_set(const TaskConfig& config, std::uint64_t seed, std::size_t count);

}  // namespace lamda
