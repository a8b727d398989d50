// Copyright 2026 The Emformer Stream Authors. All Rights Reserved.
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

#include "emformer/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "emformer/errors.h"

namespace emformer {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Blank-interleaved unit sequence: _ y1 _ y2 ... yU _
std::vector<std::int32_t> interleave(std::span<const std::int32_t> labels) {
  std::vector<std::int32_t> ext(2 * labels.size() + 1, kBlank);
  for (std::size_t u = 0; u < labels.size(); ++u) ext[2 * u + 1] = labels[u];
  return ext;
}

// Whether state s may be entered directly from state s - 2.
bool can_skip(const std::vector<std::int32_t>& ext, std::size_t s) {
  return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2];
}

}  // namespace

Matrix CtcResult::grad_logits(const Matrix& log_probs) const {
  Matrix out = grad;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += std::exp(log_probs.data()[i]);
  return out;
}

std::size_t ctc_min_frames(std::span<const std::int32_t> labels) {
  std::size_t repeats = 0;
  for (std::size_t u = 1; u < labels.size(); ++u) repeats += labels[u] == labels[u - 1] ? 1 : 0;
  return labels.size() + repeats;
}

void validate_labels(std::span<const std::int32_t> labels, std::size_t num_units) {
  for (std::int32_t y : labels) {
    if (y == kBlank) throw std::invalid_argument("ctc: label sequence contains the blank id");
    if (y < 0 || static_cast<std::size_t>(y) >= num_units) {
      throw std::invalid_argument("ctc: label " + std::to_string(y) + " outside " +
                                  std::to_string(num_units) + " units");
    }
  }
}

CtcResult ctc_loss(const Matrix& log_probs, std::span<const std::int32_t> labels) {
  const std::size_t frames = log_probs.rows();
  if (frames == 0) throw std::invalid_argument("ctc_loss: empty lattice");
  validate_labels(labels, log_probs.cols());
  if (frames < ctc_min_frames(labels)) {
    throw CtcInfeasibleError("ctc_loss: " + std::to_string(labels.size()) + " labels need " +
                             std::to_string(ctc_min_frames(labels)) + " frames, lattice has " +
                             std::to_string(frames));
  }

  const std::vector<std::int32_t> ext = interleave(labels);
  const std::size_t states = ext.size();
  Matrix alpha(frames, states, kNegInf);
  Matrix beta(frames, states, kNegInf);

  alpha(0, 0) = log_probs(0, ext[0]);
  if (states > 1) alpha(0, 1) = log_probs(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) acc = log_add(acc, alpha(t - 1, s - 1));
      if (can_skip(ext, s)) acc = log_add(acc, alpha(t - 1, s - 2));
      if (acc != kNegInf) alpha(t, s) = acc + log_probs(t, ext[s]);
    }
  }

  const std::size_t last = frames - 1;
  beta(last, states - 1) = log_probs(last, ext[states - 1]);
  if (states > 1) beta(last, states - 2) = log_probs(last, ext[states - 2]);
  for (std::size_t t = last; t-- > 0;) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = beta(t + 1, s);
      if (s + 1 < states) acc = log_add(acc, beta(t + 1, s + 1));
      if (s + 2 < states && can_skip(ext, s + 2)) acc = log_add(acc, beta(t + 1, s + 2));
      if (acc != kNegInf) beta(t, s) = acc + log_probs(t, ext[s]);
    }
  }

  double log_likelihood = alpha(last, states - 1);
  if (states > 1) log_likelihood = log_add(log_likelihood, alpha(last, states - 2));
  if (log_likelihood == kNegInf) {
    throw CtcInfeasibleError("ctc_loss: label sequence has zero probability");
  }

  CtcResult result;
  result.nll = -log_likelihood;
  result.grad = Matrix(frames, log_probs.cols());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      const double joint = alpha(t, s) + beta(t, s);
      if (joint == kNegInf) continue;
      const double occupancy = std::exp(joint - log_probs(t, ext[s]) - log_likelihood);
      result.grad(t, ext[s]) -= occupancy;
    }
  }
  return result;
}

LabelSeq ctc_collapse(std::span<const std::int32_t> path) {
  LabelSeq out;
  std::int32_t previous = -1;
  for (std::int32_t k : path) {
    if (k != previous && k != kBlank) out.push_back(k);
    previous = k;
  }
  return out;
}

double brute_force_ctc(const Matrix& log_probs, std::span<const std::int32_t> labels) {
  const std::size_t frames = log_probs.rows();
  const std::size_t units = log_probs.cols();
  double count = 1.0;
  for (std::size_t t = 0; t < frames; ++t) count *= static_cast<double>(units);
  if (count > 1e7) {
    throw std::invalid_argument("brute_force_ctc: " + std::to_string(units) + "^" +
                                std::to_string(frames) + " paths exceed 1e7");
  }
  validate_labels(labels, units);
  const LabelSeq target(labels.begin(), labels.end());

  std::vector<std::int32_t> path(frames, 0);
  double total = 0.0;
  while (true) {
    if (ctc_collapse(path) == target) {
      double log_p = 0.0;
      for (std::size_t t = 0; t < frames; ++t) log_p += log_probs(t, path[t]);
      total += std::exp(log_p);
    }
    std::size_t t = 0;
    while (t < frames && ++path[t] == static_cast<std::int32_t>(units)) path[t++] = 0;
    if (t == frames) break;
  }
  return total;
}

LabelSeq greedy_decode(const Matrix& log_probs) {
  std::vector<std::int32_t> path(log_probs.rows());
  for (std::size_t t = 0; t < log_probs.rows(); ++t) {
    const auto row = log_probs.row(t);
    path[t] = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return ctc_collapse(path);
}

LabelSeq beam_decode(const Matrix& log_probs, std::size_t width) {
  if (width == 0) throw std::invalid_argument("beam_decode: width must be >= 1");
  struct Score {
    double blank = kNegInf;
    double non_blank = kNegInf;
    double total() const { return log_add(blank, non_blank); }
  };
  using Beam = std::map<LabelSeq, Score>;

  Beam beam;
  beam[LabelSeq{}].blank = 0.0;
  for (std::size_t t = 0; t < log_probs.rows(); ++t) {
    const auto lp = log_probs.row(t);
    Beam next;
    for (const auto& [prefix, score] : beam) {
      Score& same = next[prefix];
      same.blank = log_add(same.blank, score.total() + lp[kBlank]);
      for (std::size_t k = 1; k < lp.size(); ++k) {
        const auto unit = static_cast<std::int32_t>(k);
        LabelSeq extended = prefix;
        extended.push_back(unit);
        Score& grown = next[extended];
        if (!prefix.empty() && prefix.back() == unit) {
          // A repeat only extends the prefix across a blank.
          grown.non_blank = log_add(grown.non_blank, score.blank + lp[k]);
          Score& stay = next[prefix];
          stay.non_blank = log_add(stay.non_blank, score.non_blank + lp[k]);
        } else {
          grown.non_blank = log_add(grown.non_blank, score.total() + lp[k]);
        }
      }
    }
    std::vector<std::pair<LabelSeq, Score>> ranked(next.begin(), next.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second.total() > b.second.total();
    });
    if (ranked.size() > width) ranked.resize(width);
    beam = Beam(ranked.begin(), ranked.end());
  }

  const auto best = std::max_element(beam.begin(), beam.end(), [](const auto& a, const auto& b) {
    return a.second.total() < b.second.total();
  });
  return best->first;
}

namespace ag {

Var ctc_loss(Var log_probs, std::span<const std::int32_t> labels) {
  CtcResult result = emformer::ctc_loss(log_probs.value(), labels);
  Tape& tape = *log_probs.tape();
  const std::size_t id = log_probs.id();
  return tape.record(Matrix(1, 1, result.nll), {log_probs},
                     [id, grad = std::move(result.grad)](Tape& t, const Matrix& g, const Matrix&) {
                       t.accumulate(id, emformer::scale(grad, g(0, 0)));
                     });
}

}  // namespace ag
}  // namespace emformer
