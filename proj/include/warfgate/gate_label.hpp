#pragma once

#include <string_view>

namespace warfgate {

// HighRisk is the positive class everywhere (classifier sign, confusion counts).
enum class GateLabel : int { SafeForModel = -1, HighRisk = 1 };

inline int to_int(GateLabel l) { return static_cast<int>(l); }
inline GateLabel label_from_sign(int z) { return z > 0 ? GateLabel::HighRisk : GateLabel::SafeForModel; }

inline std::string_view to_string(GateLabel l) {
  return l == GateLabel::HighRisk ? "HighRisk" : "SafeForModel";
}

}  // namespace warfgate
