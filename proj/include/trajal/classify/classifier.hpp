// Copyright 2026 The trajal Authors
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

#include "trajal/classify/nn.hpp"
#include "trajal/classify/svm.hpp"

#include <optional>
#include <string_view>
#include <variant>

namespace trajal::classify
{

enum class ClassifierTag { Svm, Nn };

inline std::string_view to_string(ClassifierTag t) noexcept
{
  return t == ClassifierTag::Svm ? "SVM" : "NN";
}

inline std::optional<ClassifierTag> parse_classifier_tag(std::string_view s) noexcept
{
  if (s == "SVM" || s == "svm") {
    return ClassifierTag::Svm;
  }
  if (s == "NN" || s == "nn") {
    return ClassifierTag::Nn;
  }
  return std::nullopt;
}

struct ClassifierConfig
{
  ClassifierTag tag = ClassifierTag::Svm;
  SvmParams svm{};
  NnParams nn{};
};

/// A trained model of either kind. Immutable after training; prediction is thread-safe.
class Classifier
{
public:
  static Classifier train(const ClassifierConfig & config, const Points & x, const std::vector<int> & labels, std::uint64_t seed)
  {
    Classifier c;
    if (config.tag == ClassifierTag::Svm) {
      c.model_ = SvmModel::train(x, labels, config.svm);
    } else {
      c.model_ = train_nn(x, labels, config.nn, seed);
    }
    return c;
  }

  PredictiveDistribution predict_proba(const Eigen::Ref<const Eigen::RowVectorXd> & point) const
  {
    return std::visit([&](const auto & m) { return m.predict_proba(point); }, model_);
  }

  int predict(const Eigen::Ref<const Eigen::RowVectorXd> & point) const { return predict_proba(point).argmax(); }

  const std::vector<int> & classes() const
  {
    return std::visit([](const auto & m) -> const std::vector<int> & { return m.classes(); }, model_);
  }

  const SvmModel * svm() const noexcept { return std::get_if<SvmModel>(&model_); }
  const NnModel * nn() const noexcept { return std::get_if<NnModel>(&model_); }

private:
  std::variant<SvmModel, NnModel> model_;
};

}  // namespace trajal::classify
