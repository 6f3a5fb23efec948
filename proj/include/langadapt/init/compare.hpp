// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "langadapt/init/extend.hpp"
#include "langadapt/train/model.hpp"

namespace langadapt::init {

/// Copy of `base_model` with E/H replaced by the extended matrices.
train::ModelParams<float> assemble(const train::ModelParams<float>& base_model, const Extended& ext);

struct CompareRow {
  std::string method;
  std::uint64_t seed = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct CompareSummary {
  std::string method;
  double mean_loss = 0.0;
  double mean_accuracy = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> rows;  // method-major, seeds in the given order
  std::vector<CompareSummary> summary;
};

/// For each method and seed: extend the base model to the merged vocabulary
/// and score the eval texts (packed with the merged tokenizer at the model's
/// context). Throws DataError if the model does not match the base tokenizer
/// or the eval texts pack to no sample.
CompareResult init_compare(const train::ModelParams<float>& base_model, const tokenizer::SubwordModel& base_tok,
                           const tokenizer::SubwordModel& merged_tok, std::span<const std::string> eval_texts,
                           const std::vector<InitMethod>& methods, const std::vector<std::uint64_t>& seeds);

/// Tab-separated summary: method, loss, accuracy.
std::string compare_table(const CompareResult& result);

}  // namespace langadapt::init
