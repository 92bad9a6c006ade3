#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace panicsim {

enum class PanicClass { NoPanic, Panic };

struct PanicLabel {
  PanicClass label = PanicClass::NoPanic;
  double score = 0.0;  // panic confidence in [0, 1]

  bool is_panic() const { return label == PanicClass::Panic; }
  friend bool operator==(const PanicLabel&, const PanicLabel&) = default;
};

inline std::string_view to_string(PanicClass c) {
  return c == PanicClass::Panic ? "Panic" : "NoPanic";
}

/// Accepts Panic/NoPanic, yes/no, 1/0, true/false (case-insensitive).
std::optional<PanicClass> parse_panic_class(std::string_view text);

}  // namespace panicsim
