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

#include <cmath>

#include "emformer/errors.h"
#include "emformer/numkernel.h"

namespace emformer {

void adam_step(std::span<Param* const> params, const AdamOptions& options) {
  for (Param* p : params) {
    if (!p->grad.same_shape(p->value)) {
      throw ShapeError("adam_step: gradient of " + p->name + " has shape " +
                       p->grad.shape_string() + ", value " + p->value.shape_string());
    }
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const double correction1 = 1.0 - std::pow(options.beta1, t);
    const double correction2 = 1.0 - std::pow(options.beta2, t);
    auto value = p->value.data();
    auto grad = p->grad.data();
    auto m = p->adam_m.data();
    auto v = p->adam_v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
    p->grad.fill(0.0);
  }
}

}  // namespace emformer
