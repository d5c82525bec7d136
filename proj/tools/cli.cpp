// Copyright 2026 The pathsynth Authors. All Rights Reserved.
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

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathsynth/config.hpp"
#include "pathsynth/dataset.hpp"
#include "pathsynth/metrics.hpp"
#include "pathsynth/nifti.hpp"
#include "pathsynth/objectives.hpp"

namespace pathsynth::cli {

using nlohmann::json;

int default_workers() {
  const char* v = std::getenv(kWorkersEnv);
  if (v == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  return (end != v && *end == '\0' && n > 0) ? static_cast<int>(n) : 1;
}

namespace {

// Maps library exceptions onto exit codes.
int report(std::ostream& err, const char* cmd, const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ManifestError& x) {
    err << cmd << ": " << x.what() << '\n';
    return kData;
  } catch (const NiftiError& x) {
    err << cmd << ": " << x.what() << '\n';
    return kData;
  } catch (const PipelineError& x) {
    err << cmd << ": " << x.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& x) {
    err << cmd << ": " << x.what() << '\n';
    return kData;
  } catch (const json::exception& x) {
    err << cmd << ": " << x.what() << '\n';
    return kData;
  } catch (const std::exception& x) {
    err << cmd << ": internal error: " << x.what() << '\n';
    return kInternal;
  } catch (...) {
    err << cmd << ": internal error\n";
    return kInternal;
  }
}

// Runs task(i) for i in [0, n) on `workers` threads. Returns the exception of
// the lowest failing index so errors do not depend on scheduling.
std::exception_ptr parallel_for(std::size_t n, int workers,
                                const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (threads == 1) {
    loop();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(loop);
  }
  for (auto& e : errors) {
    if (e) return e;
  }
  return nullptr;
}

struct SampleTask {
  std::int64_t batch = 0;
  std::int64_t index_in_batch = 0;
  std::int64_t sample_index = 0;
  std::size_t subject = 0;
  std::uint64_t batch_seed = 0;
  BatchPlanEntry plan;
};

}  // namespace

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    // Precedence: flags, then config file, then the environment default.
    GeneratorConfig config;
    config.workers = default_workers();
    if (args.config) merge_from_json(read_json(*args.config), config);
    if (args.seed) config.seed = *args.seed;
    if (args.workers) config.workers = *args.workers;
    if (args.batch_size) config.batch_size = *args.batch_size;
    if (args.sample_size) {
      const std::int64_t s = *args.sample_size;
      if (s < 0) throw std::invalid_argument("--sample-size must be >= 0");
      config.pipeline.sample_dims = {s, s, s};
    }
    if (config.workers <= 0) throw std::invalid_argument("workers must be positive");
    if (config.batch_size <= 0) throw std::invalid_argument("batch size must be positive");
    if (args.num_batches <= 0) throw std::invalid_argument("--num-batches must be positive");

    const Manifest manifest = load_manifest(args.manifest);
    std::map<std::string, double> weights = manifest.dataset_weights;
    for (const auto& [k, w] : config.dataset_weights) weights[k] = w;
    std::vector<std::string> tags;
    for (const auto& s : manifest.subjects) tags.push_back(s.dataset_tag);
    CotrainingSchedule schedule(tags, weights, config.seed);

    // Plan everything up front; the plan is independent of worker count.
    std::vector<CotrainingSchedule::Step> steps;
    std::vector<SampleTask> tasks;
    for (std::int64_t b = 0; b < args.num_batches; ++b) {
      const auto step = schedule.next();
      steps.push_back(step);
      const auto plan = plan_batch(config.batch_size, step.batch_seed,
                                   config.pipeline.share_deformation);
      for (std::int64_t i = 0; i < config.batch_size; ++i) {
        tasks.push_back({b, i, static_cast<std::int64_t>(tasks.size()), step.subject,
                         step.batch_seed, plan[static_cast<std::size_t>(i)]});
      }
    }

    // Only subjects the schedule touched are read.
    std::map<std::size_t, LabeledSubject> subjects;
    for (const auto& s : steps) {
      if (!subjects.contains(s.subject)) {
        subjects.emplace(s.subject, load_subject(manifest.subjects[s.subject], manifest));
      }
    }

    const auto error = parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
      const SampleTask& task = tasks[t];
      const LabeledSubject& subject = subjects.at(task.subject);
      const GenSample sample =
          generate_sample(subject, task.plan.severity, task.plan.seeds, config.pipeline);
      write_sample(sample, args.out_dir / subject.id / sample_dir_name(task.sample_index),
                   {task.batch, task.index_in_batch, task.sample_index, task.batch_seed},
                   config.pipeline);
    });
    if (error) return report(err, "generate", error);

    std::ofstream log(args.out_dir / "batches.jsonl", std::ios::trunc);
    for (std::int64_t b = 0; b < args.num_batches; ++b) {
      const auto& step = steps[static_cast<std::size_t>(b)];
      const auto& desc = manifest.subjects[step.subject];
      json samples = json::array();
      for (const auto& t : tasks) {
        if (t.batch != b) continue;
        samples.push_back({{"dir", desc.id + "/" + sample_dir_name(t.sample_index)},
                           {"severity", t.plan.severity}});
      }
      const json line = {{"batch", b},
                         {"subject", desc.id},
                         {"dataset", desc.dataset_tag},
                         {"alpha", desc.alpha()},
                         {"beta", desc.beta()},
                         {"batch_seed", step.batch_seed},
                         {"samples", samples}};
      out << line.dump() << '\n';
      log << line.dump() << '\n';
    }
    if (!log) throw std::runtime_error("cannot write batches.jsonl");
    return kOk;
  } catch (...) {
    return report(err, "generate", std::current_exception());
  }
}

namespace {

bool is_nifti(const std::filesystem::path& p) {
  const std::string name = p.filename().string();
  auto ends = [&](const std::string& s) {
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return ends(".nii") || ends(".nii.gz");
}

double evaluate(const std::string& metric, const Volume& pred, const Volume& ref,
                double threshold) {
  if (metric == "l1") return metric_l1(pred, ref);
  if (metric == "psnr") return metric_psnr(pred, ref);
  if (metric == "ssim") return metric_ssim(pred, ref);
  if (metric == "dice") return metric_dice(pred, ref, threshold);
  throw std::invalid_argument("unknown metric '" + metric + "'");
}

json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

int loss_record(const std::filesystem::path& batch_file, double threshold, std::ostream& out) {
  const json batch = read_json(batch_file);
  const auto base = batch_file.parent_path();
  const int alpha = batch.value("alpha", 1);
  const int beta = batch.value("beta", 1);
  LossWeights weights;
  weights.lambda = batch.value("lambda", weights.lambda);
  const std::int64_t iteration = batch.value("iteration", std::int64_t{0});
  const std::string seg_name = batch.value("segmenter", std::string("threshold"));
  const ThresholdSegmenter threshold_seg;
  const IntensitySegmenter intensity_seg;
  const ReferenceSegmenter* seg = nullptr;
  if (seg_name == "threshold") seg = &threshold_seg;
  if (seg_name == "intensity") seg = &intensity_seg;
  if (seg == nullptr) throw std::invalid_argument("unknown segmenter '" + seg_name + "'");

  auto load = [&](const json& s, const char* key) -> std::optional<Volume> {
    if (!s.contains(key) || s.at(key).is_null()) return std::nullopt;
    return read_volume(base / s.at(key).get<std::string>());
  };
  std::vector<SynthPrediction> preds;
  std::vector<std::optional<Volume>> anat, pathol;
  for (const json& s : batch.at("samples")) {
    preds.push_back({read_volume(base / s.at("pred_anat").get<std::string>()),
                     read_volume(base / s.at("pred_pathol").get<std::string>())});
    anat.push_back(load(s, "target_anat"));
    pathol.push_back(load(s, "target_pathol"));
  }
  if (preds.empty()) throw std::invalid_argument("loss batch has no samples");
  std::vector<TargetView> views;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    views.push_back({anat[i] ? &*anat[i] : nullptr, pathol[i] ? &*pathol[i] : nullptr});
  }
  const LossReport r = evaluate_losses(preds, views, *seg, *seg, alpha, beta, weights, iteration);
  json rec = json::parse(to_json_line(r));
  rec["alpha"] = alpha;
  rec["beta"] = beta;
  rec["lambda"] = weights.lambda;
  rec["segmenter"] = seg_name;

  // Batch means per active modality; PSNR averages stay finite unless every
  // sample is a perfect match.
  json metrics = json::object();
  for (int m = 0; m < 2; ++m) {
    if ((m == 0 ? alpha : beta) == 0) continue;
    double l1 = 0, psnr = 0, ssim = 0, dice = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const Volume& p = m == 0 ? preds[i].anat : preds[i].pathol;
      const Volume& t = m == 0 ? *views[i].anat : *views[i].pathol;
      l1 += metric_l1(p, t);
      psnr += metric_psnr(p, t);
      ssim += metric_ssim(p, t);
      dice += metric_dice(seg->segment(p).values(), seg->segment(t).values(), threshold);
    }
    const double n = static_cast<double>(preds.size());
    metrics[m == 0 ? "anat" : "pathol"] = {{"l1", l1 / n},
                                           {"psnr", number_or_inf(psnr / n)},
                                           {"ssim", ssim / n},
                                           {"dice", dice / n}};
  }
  rec["metrics"] = metrics;
  rec["dice_threshold"] = threshold;
  out << rec.dump() << '\n';
  return kOk;
}

}  // namespace

int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.loss_batch) return loss_record(*args.loss_batch, args.threshold, out);
    for (const auto& m : args.metrics) {
      if (m != "l1" && m != "psnr" && m != "ssim" && m != "dice") {
        err << "metrics: unknown metric '" << m << "'\n";
        return kUsage;
      }
    }
    std::vector<std::filesystem::path> preds;
    if (std::filesystem::is_directory(args.pred)) {
      for (const auto& e : std::filesystem::directory_iterator(args.pred)) {
        if (e.is_regular_file() && is_nifti(e.path())) preds.push_back(e.path());
      }
      std::sort(preds.begin(), preds.end());
      if (preds.empty()) throw std::invalid_argument("no NIfTI files in " + args.pred.string());
    } else {
      preds.push_back(args.pred);
    }
    const Volume ref = read_volume(args.ref);
    for (const auto& p : preds) {
      const Volume pred = read_volume(p);
      if (pred.grid().dims != ref.grid().dims) {
        throw std::invalid_argument(p.string() + ": dimensions differ from reference");
      }
      for (const auto& m : args.metrics) {
        const double v = evaluate(m, pred, ref, args.threshold);
        json rec = {{"pred", p.string()}, {"ref", args.ref.string()}, {"metric", m}};
        rec["value"] = number_or_inf(v);
        if (m == "dice") rec["threshold"] = args.threshold;
        out << rec.dump() << '\n';
      }
    }
    return kOk;
  } catch (...) {
    return report(err, "metrics", std::current_exception());
  }
}

int cmd_inspect(const InspectArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const json meta = read_json(args.sample_dir / "meta.json");
    const json& files = meta.at("files");
    if (!files.contains(args.volume)) {
      err << "inspect: sample has no volume '" << args.volume << "'\n";
      return kUsage;
    }
    const Volume v = read_volume(args.sample_dir / files.at(args.volume).get<std::string>());
    const Dims d = v.grid().dims;

    int axis = 2;
    std::int64_t index = d[2] / 2;
    if (!args.slice.empty()) {
      const auto colon = args.slice.find(':');
      const std::string name = args.slice.substr(0, colon);
      if (colon == std::string::npos || name.size() != 1 || std::string("xyz").find(name) == std::string::npos) {
        err << "inspect: --slice expects axis:index with axis in x,y,z\n";
        return kUsage;
      }
      axis = static_cast<int>(std::string("xyz").find(name));
      try {
        index = std::stoll(args.slice.substr(colon + 1));
      } catch (const std::exception&) {
        err << "inspect: bad slice index in '" << args.slice << "'\n";
        return kUsage;
      }
    }
    if (index < 0 || index >= d[axis]) {
      err << "inspect: slice index " << index << " outside [0, " << d[axis] << ")\n";
      return kUsage;
    }

    const int u = axis == 0 ? 1 : 0;
    const int w = axis == 2 ? 1 : 2;
    if (args.out) {
      // Labels are scaled by their maximum, intensities clamped to [0,1].
      float scale = 1.0f;
      if (args.volume == "labels") {
        const float mx = *std::max_element(v.data().begin(), v.data().end());
        scale = mx > 0.0f ? 1.0f / mx : 1.0f;
      }
      std::vector<std::uint8_t> pixels;
      pixels.reserve(static_cast<std::size_t>(d[u] * d[w]));
      for (std::int64_t r = d[w] - 1; r >= 0; --r) {  // top row = highest index
        for (std::int64_t c = 0; c < d[u]; ++c) {
          std::array<std::int64_t, 3> ijk{};
          ijk[axis] = index;
          ijk[u] = c;
          ijk[w] = r;
          const float x = std::clamp(v.at(ijk[0], ijk[1], ijk[2]) * scale, 0.0f, 1.0f);
          pixels.push_back(static_cast<std::uint8_t>(std::lround(x * 255.0f)));
        }
      }
      std::ofstream pgm(*args.out, std::ios::binary | std::ios::trunc);
      pgm << "P5\n" << d[u] << ' ' << d[w] << "\n255\n";
      pgm.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
      if (!pgm) throw std::runtime_error("cannot write " + args.out->string());
    }

    json summary = {{"sample_dir", args.sample_dir.string()},
                    {"subject_id", meta.at("subject_id")},
                    {"dataset", meta.at("dataset")},
                    {"sample_index", meta.at("sample_index")},
                    {"batch_index", meta.at("batch_index")},
                    {"severity", meta.at("severity")},
                    {"alpha", meta.at("alpha")},
                    {"beta", meta.at("beta")},
                    {"pathology_draw", meta.at("pathology_draw")},
                    {"corruption", meta.at("corruption")},
                    {"dims", d},
                    {"volume", args.volume},
                    {"slice", {{"axis", std::string(1, "xyz"[axis])}, {"index", index}}}};
    if (args.out) summary["out"] = args.out->string();
    out << summary.dump() << '\n';
    return kOk;
  } catch (...) {
    return report(err, "inspect", std::current_exception());
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pathsynth: pathology-encoded synthetic brain MRI generator"};
  app.require_subcommand(1);

  GenerateArgs gen;
  std::string gen_config;
  std::uint64_t gen_seed = 0;
  int gen_workers = 0;
  std::int64_t gen_batch = 0;
  std::int64_t gen_size = 0;
  auto* g = app.add_subcommand("generate", "Generate training batches from a manifest");
  g->add_option("--manifest", gen.manifest, "Subject manifest (JSON)")->required();
  g->add_option("--out", gen.out_dir, "Output directory")->required();
  auto* g_config = g->add_option("--config", gen_config, "Generator config (JSON)");
  auto* g_seed = g->add_option("--seed", gen_seed, "Master seed");
  g->add_option("--num-batches", gen.num_batches, "Number of batches")->capture_default_str();
  auto* g_workers = g->add_option("--workers", gen_workers,
                                  std::string("Worker threads (default $") + kWorkersEnv + " or 1)");
  auto* g_batch = g->add_option("--batch-size", gen_batch, "Samples per batch");
  auto* g_size = g->add_option("--sample-size", gen_size, "Output cube edge in voxels (0 = subject grid)");

  MetricsArgs met;
  std::vector<std::string> met_names;
  auto* m = app.add_subcommand("metrics", "Compare predictions against a reference");
  std::string met_loss;
  auto* m_pred = m->add_option("pred", met.pred, "Prediction file or directory");
  auto* m_ref = m->add_option("ref", met.ref, "Reference file");
  auto* m_loss = m->add_option("--loss", met_loss, "Batch description (JSON); prints a loss record");
  m_loss->excludes(m_pred)->excludes(m_ref);
  m->add_option("--metric", met_names, "l1, psnr, ssim or dice (repeatable)")
      ->check(CLI::IsMember({"l1", "psnr", "ssim", "dice"}));
  m->add_option("--threshold", met.threshold, "Binarization threshold for dice")->capture_default_str();

  InspectArgs ins;
  std::string ins_out;
  auto* i = app.add_subcommand("inspect", "Render one slice of a generated sample");
  i->add_option("sample_dir", ins.sample_dir, "Sample directory")->required();
  i->add_option("--slice", ins.slice, "axis:index, e.g. z:64");
  auto* i_out = i->add_option("--out", ins_out, "Output PGM file");
  i->add_option("--volume", ins.volume, "image, labels, pathology, target_anat, target_pathol")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  if (g->parsed()) {
    if (*g_config) gen.config = gen_config;
    if (*g_seed) gen.seed = gen_seed;
    if (*g_workers) gen.workers = gen_workers;
    if (*g_batch) gen.batch_size = gen_batch;
    if (*g_size) gen.sample_size = gen_size;
    return cmd_generate(gen, out, err);
  }
  if (m->parsed()) {
    if (!met_names.empty()) met.metrics = met_names;
    if (*m_loss) {
      met.loss_batch = met_loss;
    } else if (!*m_pred || !*m_ref) {
      err << "metrics: expected <pred> <ref> or --loss <batch.json>\n";
      return kUsage;
    }
    return cmd_metrics(met, out, err);
  }
  if (*i_out) ins.out = ins_out;
  return cmd_inspect(ins, out, err);
}

}  // namespace pathsynth::cli
