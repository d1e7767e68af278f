#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/grid.hpp"

namespace resflow {

/// Real = 0, Fake = 1; model outputs are P(Fake).
enum class Label { Real = 0, Fake = 1 };

inline int label_value(Label l) noexcept { return l == Label::Fake ? 1 : 0; }

inline std::string_view label_name(Label l) noexcept { return l == Label::Fake ? "fake" : "real"; }

inline Label parse_label(std::string_view s) {
  if (s == "real" || s == "Real" || s == "0") return Label::Real;
  if (s == "fake" || s == "Fake" || s == "1") return Label::Fake;
  throw Error(Errc::ParseError, "unknown label '" + std::string(s) + "'");
}

/// Decoded frames of one video, in temporal order.
struct FrameSequence {
  std::vector<RgbImage> frames;
  std::string id;
  Label label = Label::Real;

  std::size_t size() const noexcept { return frames.size(); }
  int width() const noexcept { return frames.empty() ? 0 : frames.front().width; }
  int height() const noexcept { return frames.empty() ? 0 : frames.front().height; }
};

/// Throws EmptySequence / InconsistentDimensions.
inline void validate_sequence(const FrameSequence& seq) {
  if (seq.frames.empty()) throw Error(Errc::EmptySequence, "video '" + seq.id + "' has no frames");
  for (std::size_t i = 1; i < seq.frames.size(); ++i)
    if (seq.frames[i].width != seq.frames[0].width || seq.frames[i].height != seq.frames[0].height)
      throw Error(Errc::InconsistentDimensions,
                  "video '" + seq.id + "' frame " + std::to_string(i) + " is " +
                      std::to_string(seq.frames[i].width) + "x" + std::to_string(seq.frames[i].height) +
                      ", expected " + std::to_string(seq.frames[0].width) + "x" +
                      std::to_string(seq.frames[0].height));
}

}  // namespace resflow
