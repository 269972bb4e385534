#pragma once

#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "podpipe/collection.hpp"
#include "podpipe/field_layout.hpp"
#include "podpipe/frames.hpp"
#include "podpipe/sim.hpp"

namespace podpipe {

/// What a detector sees of one frame: the record plus the geometry the
/// pipeline derived for it. Detectors never receive pixel buffers; real
/// inference runs outside and communicates through detection files.
struct FrameContext {
  const FrameRecord* frame = nullptr;
  /// Along-column coordinate of the frame center from the GPS track;
  /// meaningful only when has_center is set.
  double center_s_m = 0.0;
  bool has_center = false;
  /// Column index viewed by this frame's side, -1 when unknown.
  int column_index = -1;
};

class Detector {
 public:
  virtual ~Detector() = default;
  /// True when detect() may run concurrently from several threads.
  virtual bool concurrent_safe() const = 0;
  /// Deterministic for a fixed frame and detector state.
  virtual std::vector<Detection> detect(const FrameContext& ctx) = 0;
};

/// Replays the synthetic detection law against simulated ground truth;
/// stands in for an external detection model during verification.
class OracleDetector final : public Detector {
 public:
  OracleDetector(const FieldLayout& layout, const GroundTruth& truth,
                 const SynthParams& params);
  bool concurrent_safe() const override { return true; }
  std::vector<Detection> detect(const FrameContext& ctx) override;

 private:
  FieldLayout layout_;
  PodWorld world_;
  SynthParams params_;
};

/// Serves recorded detections: boxes embedded in the frame stream are
/// returned verbatim (they are already crop-space), sibling-store boxes
/// are raw-frame and pass through apply_crop first.
class FileDetector final : public Detector {
 public:
  explicit FileDetector(const CropSpec& crop);
  /// Registers a raw-frame detection store (detections.jsonl contents).
  void add_store(const std::vector<FrameDetections>& store);
  bool concurrent_safe() const override { return true; }
  std::vector<Detection> detect(const FrameContext& ctx) override;
  /// Frames that had no recorded detections anywhere; sorted and unique so
  /// the listing is schedule-independent.
  std::vector<std::string> notices() const;

 private:
  CropSpec crop_;
  std::unordered_map<std::string, std::vector<Detection>> store_;
  mutable std::mutex mu_;
  std::vector<std::string> notices_;
};

/// Pods in one frame: detections at or above the confidence threshold.
int count_frame(const std::vector<Detection>& detections, double confidence_threshold);

}  // namespace podpipe
