#include "podpipe/detect.hpp"

#include <algorithm>

#include "podpipe/errors.hpp"

namespace podpipe {

OracleDetector::OracleDetector(const FieldLayout& layout, const GroundTruth& truth,
                               const SynthParams& params)
    : layout_(layout), world_(build_pod_world(layout, truth, params.seed)), params_(params) {
  validate(layout_);
}

std::vector<Detection> OracleDetector::detect(const FrameContext& ctx) {
  if (!ctx.frame) fail(Errc::validation, "frame context carries no frame");
  const auto it = world_.columns.find(ctx.column_index);
  if (!ctx.has_center || it == world_.columns.end())
    fail(Errc::unsupported_frame,
         "frame '" + ctx.frame->frame_id + "' has no simulated ground truth");
  return synth_frame_detections(ctx.frame->frame_id, ctx.center_s_m, it->second, world_,
                                layout_, params_);
}

FileDetector::FileDetector(const CropSpec& crop) : crop_(crop) { validate(crop_); }

void FileDetector::add_store(const std::vector<FrameDetections>& store) {
  for (const auto& fd : store) {
    auto& slot = store_[fd.frame_id];
    slot.insert(slot.end(), fd.detections.begin(), fd.detections.end());
  }
}

std::vector<Detection> FileDetector::detect(const FrameContext& ctx) {
  if (!ctx.frame) fail(Errc::validation, "frame context carries no frame");
  if (ctx.frame->has_detections) return ctx.frame->detections;  // embedded wins
  const auto it = store_.find(ctx.frame->frame_id);
  if (it == store_.end()) {
    const std::lock_guard<std::mutex> lock(mu_);
    notices_.push_back(ctx.frame->frame_id);
    return {};
  }
  std::vector<Detection> out;
  out.reserve(it->second.size());
  for (const auto& box : it->second)
    if (const auto kept = apply_crop(crop_, box)) out.push_back(*kept);
  return out;
}

std::vector<std::string> FileDetector::notices() const {
  const std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out = notices_;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int count_frame(const std::vector<Detection>& detections, double confidence_threshold) {
  if (!(confidence_threshold >= 0.0) || confidence_threshold > 1.0)
    fail(Errc::validation, "confidence_threshold must lie in [0, 1]");
  int n = 0;
  for (const auto& d : detections)
    if (d.conf >= confidence_threshold) ++n;
  return n;
}

}  // namespace podpipe
