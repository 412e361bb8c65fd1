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

#include "lamda/tasks.hpp"

#include <algorithm>

#include "lamda/error.hpp"

namespace lamda {

std::string to_string(TaskId task) {
  switch (task) {
    case TaskId::copy: return "copy";
    case TaskId::reverse: return "reverse";
    case TaskId::modsum: return "modsum";
    case TaskId::corpus: return "corpus";
  }
  return "?";
}

TaskId parse_task(const std::string& text) {
  for (TaskId t : {TaskId::copy, TaskId::reverse, TaskId::modsum, TaskId::corpus})
    if (to_string(t) == text) return t;
  throw ConfigError("unknown task '" + text + "' (expected copy, reverse, modsum or corpus)");
}

void TaskConfig::validate() const {
  if (vocab < 3) throw ConfigError("task vocab must hold at least one content token");
  if (prompt_len == 0 || batch == 0) throw ConfigError("task sizes must be positive");
  if (task == TaskId::corpus && corpus_text.size() < seq_len() + 1) {
    throw ConfigError("corpus text shorter than one training window (" +
                      std::to_string(seq_len() + 1) + " characters)");
  }
}

std::vector<int> task_sequence(TaskId task, const std::vector<int>& prompt, std::size_t vocab) {
  const int symbols = static_cast<int>(vocab) - kFirstContentToken;
  std::vector<int> seq(prompt);
  seq.push_back(kSepToken);
  switch (task) {
    case TaskId::copy: seq.insert(seq.end(), prompt.begin(), prompt.end()); break;
    case TaskId::reverse: seq.insert(seq.end(), prompt.rbegin(), prompt.rend()); break;
    case TaskId::modsum: {
      int acc = 0;
      for (int x : prompt) {
        acc = (acc + (x - kFirstContentToken)) % symbols;
        seq.push_back(acc + kFirstContentToken);
      }
      break;
    }
    case TaskId::corpus: throw ContractError("task_sequence: corpus task has no prompt rule");
  }
  return seq;
}

TaskStream::TaskStream(TaskConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  config_.validate();
  if (config_.task == TaskId::corpus) {
    const int symbols = static_cast<int>(config_.vocab) - kFirstContentToken;
    for (unsigned char c : config_.corpus_text)
      corpus_tokens_.push_back(kFirstContentToken + c % symbols);
  }
}

Batch TaskStream::next() {
  Batch b;
  b.batch = config_.batch;
  b.seq = config_.seq_len();
  b.inputs.reserve(b.batch * b.seq);
  b.targets.reserve(b.batch * b.seq);
  const std::size_t m = config_.prompt_len;
  for (std::size_t s = 0; s < b.batch; ++s) {
    std::vector<int> full;
    bool scored_prefix = false;
    if (config_.task == TaskId::corpus) {
      const std::size_t start = rng_.below(corpus_tokens_.size() - b.seq);
      full.assign(corpus_tokens_.begin() + start, corpus_tokens_.begin() + start + b.seq + 1);
      scored_prefix = true;
    } else {
      std::vector<int> prompt(m);
      for (int& x : prompt)
        x = kFirstContentToken + static_cast<int>(rng_.below(config_.vocab - kFirstContentToken));
      full = task_sequence(config_.task, prompt, config_.vocab);
    }
    for (std::size_t i = 0; i < b.seq; ++i) {
      b.inputs.push_back(full[i]);
      // Position i predicts full[i + 1]; answers start after the separator.
      b.targets.push_back(scored_prefix || i >= m ? full[i + 1] : -1);
    }
  }
  return b;
}

TaskStream make_task(const TaskConfig& config, std::uint64_t seed) {
  return TaskStream(config, seed);
}

std::vector<Batch> make_eval_set(const TaskConfig& config, std::uint64_t seed,
                                 std::size_t count) {
  TaskStream stream(config, Rng(seed).fork(0xE7A1).next_u64());
  std::vector<Batch> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(stream.next());
  return out;
}

}  // namespace lamda
