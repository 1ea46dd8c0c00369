// Copyright 2026 The LabelForge Authors
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


// Synthetic two-class data with asymmetric label noise, and a driver that
// plays a perfect auditor against the cleaning workflow.

#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "labelforge/embedding.hpp"
#include "labelforge/rng.hpp"
#include "labelforge/workflow.hpp"

namespace labelforge::testing {

struct SyntheticSpec {
  std::size_t n = 50000;
  Eigen::Index dim = 8;
  double prior = 0.5;       // P(truth = TRUE)
  double separation = 2.5;  // class means at +/- separation along the diagonal
  // Observed-label error rates: P(truth TRUE | observed FALSE) and
  // P(truth FALSE | observed TRUE).
  double err_n = 0.209;
  double err_p = 0.016;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  EmbeddingStore store{8};
  std::vector<std::string> ids;
  std::vector<LabelValue> truth;
  std::vector<LabelValue> noisy;
};

/// Flip probabilities (TRUE -> FALSE, FALSE -> TRUE) that produce the
/// requested observed error rates under `prior`.
inline std::pair<double, double> flip_rates(const SyntheticSpec& s) {
  const double observed_false = ((1.0 - s.prior) - s.err_p) / (1.0 - s.err_n - s.err_p);
  const double t2f = s.err_n * observed_false / s.prior;
  const double f2t = s.err_p * (1.0 - observed_false) / (1.0 - s.prior);
  return {t2f, f2t};
}

inline std::string synthetic_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.jpg", i + 1);
  return buf;
}

inline SyntheticData make_synthetic(const SyntheticSpec& s) {
  SyntheticData d;
  d.store = EmbeddingStore(s.dim);
  const auto [t2f, f2t] = flip_rates(s);
  Rng rng(s.seed);
  const double step = s.separation / std::sqrt(static_cast<double>(s.dim));
  Vector<double> x(s.dim);
  for (std::size_t i = 0; i < s.n; ++i) {
    const bool positive = rng.bernoulli(s.prior);
    for (Eigen::Index j = 0; j < s.dim; ++j) x(j) = (positive ? step : -step) + rng.normal();
    const bool flip = rng.bernoulli(positive ? t2f : f2t);
    d.ids.push_back(synthetic_id(i));
    d.truth.push_back(from_bool(positive));
    d.noisy.push_back(from_bool(positive != flip));
    d.store.add(d.ids.back(), "", x);
  }
  return d;
}

/// First `fraction` of a seeded permutation is the clean seed (true labels),
/// the rest is the uncleaned pool.
inline std::pair<std::vector<std::pair<std::string, LabelValue>>, std::vector<std::string>>
split_seed(const SyntheticData& d, std::size_t count, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_seed = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count)));
  std::vector<std::pair<std::string, LabelValue>> clean;
  std::vector<std::string> rest;
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t i = order[r];
    if (r < n_seed) {
      clean.emplace_back(d.ids[i], d.truth[i]);
    } else {
      rest.push_back(d.ids[i]);
    }
  }
  return {clean, rest};
}

/// Truth lookup by id for ids made by synthetic_id.
inline LabelValue truth_of(const SyntheticData& d, const std::string& id) {
  return d.truth[std::stoul(id.substr(0, id.find('.'))) - 1];
}

/// Runs rounds until the workflow leaves RUNNING or `max_steps` rounds pass.
/// Eligible bins are audited with true labels, small ineligible bins are
/// labeled by hand, the rest are deferred.
inline void drive_perfect_auditor(WorkflowState& state, const SyntheticData& d,
                                  std::size_t max_steps = 50) {
  for (std::size_t step = 0; step < max_steps && state.status == WorkflowStatus::Running; ++step) {
    run_round(state, d.store);
    for (std::size_t v = 0; v < state.bins.size() && state.status == WorkflowStatus::Running; ++v) {
      const AgreementBin& bin = state.bins[v];
      if (bin.members.empty() || bin.decision != BinDecision::Undecided) continue;
      if (audit_eligible(v, state.config)) {
        std::map<std::string, LabelValue> answers;
        for (const auto& id : audit_sample(state, v)) answers[id] = truth_of(d, id);
        audit_bin(state, v, answers);
      } else if (bin.members.size() <= state.config.small_bin_threshold) {
        std::map<std::string, LabelValue> labels;
        for (const auto& id : bin.members) labels[id] = truth_of(d, id);
        mark_manual(state, v, labels);
      } else {
        defer_bin(state, v);
      }
    }
  }
}

/// Fraction of cleaned labels that differ from the truth.
inline double ground_truth_error(const WorkflowState& state, const SyntheticData& d) {
  std::size_t wrong = 0;
  for (const auto& [id, label] : state.cleaned) wrong += label != truth_of(d, id);
  return state.cleaned.empty() ? 0.0
                               : static_cast<double>(wrong) / static_cast<double>(state.cleaned.size());
}

}  // namespace labelforge::testing
