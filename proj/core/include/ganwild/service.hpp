/* Copyright 2026 The ganwild Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GANWILD_SERVICE_HPP_
#define GANWILD_SERVICE_HPP_

#include <memory>
#include <string>

#include "ganwild/inversion.hpp"
#include "ganwild/pipeline.hpp"

namespace ganwild {

// JSON API behind the labeling console:
//   GET  /api/queue?n=<int>            [{image_id, score, aligned, has_composite}]
//   GET  /api/images/<id>              stored image bytes
//   GET  /api/images/<id>/composite    side-by-side JPEG, X-LPIPS / X-MSE headers;
//                                      202 while the inversion job runs
//   POST /api/labels                   {image_id, annotator_id, label} -> {accepted: true}
//   GET  /api/progress                 {labeled, remaining, per_label_counts}
//   GET  /api/calibration              threshold and error estimate, 404 until computable
//   GET  /api/jobs                     background inversion job states
class LabelService {
 public:
  LabelService(Pipeline& pipeline, std::unique_ptr<GeneratorAdapter> generator,
               std::unique_ptr<PerceptualDistance> perceptual);
  ~LabelService();
  LabelService(const LabelService&) = delete;
  LabelService& operator=(const LabelService&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ganwild

#endif  // GANWILD_SERVICE_HPP_
