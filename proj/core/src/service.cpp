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

#include "ganwild/service.hpp"

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "ganwild/image.hpp"
#include "httplib.h"
#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view message) {
  reply_json(res, status, json{{"error", message}});
}

}  // namespace

struct LabelService::Impl {
  Pipeline& pipeline;
  std::unique_ptr<GeneratorAdapter> generator;
  std::unique_ptr<PerceptualDistance> perceptual;
  httplib::Server server;

  std::mutex jobs_mutex;
  std::condition_variable jobs_cv;
  std::deque<std::string> queue;
  std::map<std::string, std::string> job_state;  // pending, running, done, skipped, failed
  bool stopping = false;
  std::thread worker;

  Impl(Pipeline& p, std::unique_ptr<GeneratorAdapter> g, std::unique_ptr<PerceptualDistance> d)
      : pipeline(p), generator(std::move(g)), perceptual(std::move(d)) {
    worker = std::thread([this] { work(); });
    routes();
  }

  ~Impl() {
    {
      std::lock_guard lock(jobs_mutex);
      stopping = true;
    }
    jobs_cv.notify_all();
    server.stop();
    if (worker.joinable()) worker.join();
  }

  void enqueue(const std::string& id) {
    {
      std::lock_guard lock(jobs_mutex);
      const auto it = job_state.find(id);
      if (it != job_state.end() && (it->second == "pending" || it->second == "running")) return;
      job_state[id] = "pending";
      queue.push_back(id);
    }
    jobs_cv.notify_one();
  }

  void work() {
    for (;;) {
      std::string id;
      {
        std::unique_lock lock(jobs_mutex);
        jobs_cv.wait(lock, [this] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        job_state[id] = "running";
      }
      std::string state;
      try {
        const std::string ids[] = {id};
        const auto jobs = pipeline.invert_images(ids, *generator, *perceptual);
        state = jobs.front().ran ? "done" : "skipped";
      } catch (const std::exception&) {
        state = "failed";
      }
      std::lock_guard lock(jobs_mutex);
      job_state[id] = state;
    }
  }

  void routes() {
    server.Get("/api/queue", [this](const httplib::Request& req, httplib::Response& res) {
      std::size_t n = 20;
      if (req.has_param("n")) {
        try {
          const long long v = std::stoll(req.get_param_value("n"));
          if (v < 0) throw std::out_of_range("n");
          n = static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
          return reply_error(res, 400, "n must be a non-negative integer");
        }
      }
      try {
        json items = json::array();
        for (const auto& q : pipeline.labeling_queue(n)) {
          items.push_back({{"image_id", q.image_id},
                           {"score", q.score},
                           {"aligned", q.aligned},
                           {"has_composite", q.has_composite}});
        }
        reply_json(res, 200, items);
      } catch (const Error& e) {
        reply_error(res, 409, e.what());
      }
    });

    server.Get(R"(/api/images/([0-9a-f]{64}))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const ImageRecord* r = pipeline.manifest().find(id);
      if (!r) return reply_error(res, 404, "unknown image");
      const auto bytes = pipeline.store().load_bytes(*r);
      res.set_content(std::string(bytes.begin(), bytes.end()),
                      r->format == ImageFormat::PNG ? "image/png" : "image/jpeg");
    });

    server.Get(R"(/api/images/([0-9a-f]{64})/composite)", [this](const httplib::Request& req,
                                                                  httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!pipeline.manifest().find(id)) return reply_error(res, 404, "unknown image");
      if (pipeline.has_composite(id)) {
        const auto bytes = read_file_bytes(pipeline.composite_path(id));
        if (const auto inv = pipeline.inversion(id)) {
          res.set_header("X-LPIPS", fmt::format("{:.6f}", inv->lpips));
          res.set_header("X-MSE", fmt::format("{:.6f}", inv->mse));
        }
        res.set_content(std::string(bytes.begin(), bytes.end()), "image/jpeg");
        return;
      }
      if (!pipeline.is_image_aligned(id)) return reply_error(res, 404, "image is not aligned; no reconstruction");
      enqueue(id);
      reply_json(res, 202, json{{"status", "pending"}});
    });

    server.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
      LabelEvent event;
      try {
        const json body = json::parse(req.body);
        event.image_id = body.at("image_id").get<std::string>();
        event.annotator_id = body.at("annotator_id").get<std::string>();
        event.label = parse_label(body.at("label").get<std::string>());
        if (const auto it = body.find("assist_seen"); it != body.end()) {
          event.assist_seen.alignment = it->value("alignment", false);
          event.assist_seen.inversion_composite = it->value("inversion_composite", false);
        }
      } catch (const std::exception& e) {
        return reply_error(res, 400, fmt::format("bad label request: {}", e.what()));
      }
      event.labeled_at = now_utc();
      try {
        pipeline.submit_label(event);
      } catch (const Error& e) {
        return reply_error(res, 422, e.what());
      }
      reply_json(res, 200, json{{"accepted", true}});
    });

    server.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      try {
        const Progress p = pipeline.progress();
        json counts = json::object();
        for (const auto& [l, n] : p.per_label) counts[std::string(to_string(l))] = n;
        reply_json(res, 200, json{{"labeled", p.labeled}, {"remaining", p.remaining}, {"per_label_counts", counts}});
      } catch (const Error& e) {
        reply_error(res, 409, e.what());
      }
    });

    server.Get("/api/calibration", [this](const httplib::Request&, httplib::Response& res) {
      try {
        const CalibrationOutcome o = pipeline.calibrate_and_estimate();
        res.status = 200;
        res.set_content(o.to_json(), "application/json");
      } catch (const Error& e) {
        reply_error(res, 404, e.what());
      }
    });

    server.Get("/api/jobs", [this](const httplib::Request&, httplib::Response& res) {
      json jobs = json::object();
      {
        std::lock_guard lock(jobs_mutex);
        for (const auto& [id, state] : job_state) jobs[id] = state;
      }
      reply_json(res, 200, jobs);
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        reply_error(res, 500, e.what());
      } catch (...) {
        reply_error(res, 500, "internal error");
      }
    });
  }
};

LabelService::LabelService(Pipeline& pipeline, std::unique_ptr<GeneratorAdapter> generator,
                           std::unique_ptr<PerceptualDistance> perceptual)
    : impl_(std::make_unique<Impl>(pipeline, std::move(generator), std::move(perceptual))) {}

LabelService::~LabelService() = default;

int LabelService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(fmt::format("cannot bind {}", host));
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error(fmt::format("cannot bind {}:{}", host, port));
  return port;
}

void LabelService::serve() { impl_->server.listen_after_bind(); }

void LabelService::stop() { impl_->server.stop(); }

}  // namespace ganwild
