#pragma once

// Minimal CSV output: comma delimiter, LF line endings, doubles printed with
// 17 significant digits so they round-trip.

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace stefan::csv {

inline std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((emit(cells, first)), ...);
    out_ << '\n';
  }

 private:
  template <typename T>
  void emit(const T& cell, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      out_ << format(static_cast<double>(cell));
    } else {
      out_ << cell;
    }
  }

  std::ostream& out_;
};

}  // namespace stefan::csv
